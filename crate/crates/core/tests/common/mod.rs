// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use potts_core::StepFunction;
use rand::Rng;

/// All order-preserving partial matchings between `0..p` and `0..q`.
pub fn matchings(p: usize, q: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(
        a: usize,
        b: usize,
        p: usize,
        q: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        out.push(cur.clone());
        for i in a..p {
            for j in b..q {
                cur.push((i, j));
                rec(i + 1, j + 1, p, q, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, 0, p, q, &mut Vec::new(), &mut out);
    out
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (x - x0) * (y1 - y0) / (x1 - x0)
}

/// `max(L(lambda), sup_t |f(lambda(t)) - g(t)|)` for the piecewise-linear
/// time change through the matched jumps, evaluated on the global grid of
/// critical points.
pub fn cost_of_matching(f: &StepFunction, g: &StepFunction, m: &[(usize, usize)]) -> f64 {
    let mut ts = vec![0.0];
    let mut ss = vec![0.0];
    for &(a, b) in m {
        ss.push(f.breakpoints()[a]);
        ts.push(g.breakpoints()[b]);
    }
    ts.push(1.0);
    ss.push(1.0);
    let l = ts
        .windows(2)
        .zip(ss.windows(2))
        .map(|(t, s)| ((s[1] - s[0]) / (t[1] - t[0])).ln().abs())
        .fold(0.0, f64::max);
    let mut crit: Vec<f64> = vec![0.0, 1.0];
    crit.extend(g.breakpoints());
    crit.extend(f.breakpoints().iter().map(|&s| interp(&ss, &ts, s)));
    crit.sort_by(f64::total_cmp);
    let mut sup = 0.0f64;
    for w in crit.windows(2) {
        if w[1] > w[0] {
            let mid = 0.5 * (w[0] + w[1]);
            sup = sup.max((f.eval(interp(&ts, &ss, mid)) - g.eval(mid)).abs());
        }
    }
    l.max(sup)
}

/// Skorokhod distance by exhaustive enumeration of jump matchings.
pub fn skorokhod_by_enumeration(f: &StepFunction, g: &StepFunction) -> f64 {
    matchings(f.num_jumps(), g.num_jumps())
        .iter()
        .map(|m| cost_of_matching(f, g, m))
        .fold(f64::INFINITY, f64::min)
}

/// Random step function with up to `max_jumps` jumps and integer-ish levels
/// in `[-3, 3]`; roughly half the draws use a coarse grid so that ties and
/// near-coincident jumps occur.
pub fn random_step(rng: &mut impl Rng, max_jumps: usize) -> StepFunction {
    let k = rng.random_range(0..=max_jumps);
    let coarse = rng.random_bool(0.5);
    let mut bps: Vec<f64> = (0..k)
        .map(|_| {
            if coarse {
                rng.random_range(1..20) as f64 / 20.0
            } else {
                rng.random_range(0.01..0.99)
            }
        })
        .collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let levels: Vec<f64> = (0..=bps.len())
        .map(|_| {
            if coarse {
                rng.random_range(-3..=3) as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    StepFunction::new(bps, levels).expect("valid random step function")
}

/// Short random signal; discrete values make exact ties between candidate
/// segmentations common.
pub fn random_signal(rng: &mut impl Rng, max_n: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_n);
    match rng.random_range(0..3) {
        0 => (0..n).map(|_| rng.random_range(0..3) as f64).collect(),
        1 => (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        _ => {
            let mut level = 0.0;
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.25) {
                        level = rng.random_range(-3.0..3.0);
                    }
                    level + 0.1 * rng.random_range(-1.0..1.0)
                })
                .collect()
        }
    }
}

/// Constant, alternating and monotone signals of every length up to `max_n`.
pub fn adversarial_signals(max_n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push(vec![1.5; n]);
        out.push((0..n).map(|i| (i % 2) as f64).collect());
        out.push((0..n).map(|i| i as f64).collect());
    }
    out
}

/// `count` penalties log-spaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
