// SPDX-License-Identifier: MIT OR Apache-2.0

//! Distances between jump sets and between step functions.

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::stepfn::{merged_pieces, StepFunction};

/// Sorted, strictly increasing points of `(0, 1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    points: Vec<f64>,
}

impl JumpSet {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(PottsError::invalid(format!(
                "jump {p} is not inside (0, 1)"
            )));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl From<&StepFunction> for JumpSet {
    fn from(f: &StepFunction) -> Self {
        Self {
            points: f.breakpoints().to_vec(),
        }
    }
}

/// Largest distance from a point of `a` to its nearest point in `b`; both
/// sorted and non-empty. One forward sweep.
fn directed(a: &[f64], b: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst = 0.0f64;
    for &x in a {
        while j + 1 < b.len() && b[j + 1] <= x {
            j += 1;
        }
        let mut d = (x - b[j]).abs();
        if let Some(&next) = b.get(j + 1) {
            d = d.min((next - x).abs());
        }
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance between jump sets, with distance 1 between the empty
/// set and any non-empty set and 0 between two empty sets.
pub fn hausdorff(a: &JumpSet, b: &JumpSet) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => directed(a.points(), b.points()).max(directed(b.points(), a.points())),
    }
}

/// Essential supremum of `|f - g|`.
pub fn sup_distance(f: &StepFunction, g: &StepFunction) -> f64 {
    merged_pieces(f, g)
        .into_iter()
        .map(|(_, _, u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkorokhodResult {
    pub distance: f64,
    /// Matched `(jump of f, jump of g)` pairs; the optimal time change maps
    /// each `g` jump onto its partner.
    pub matching: Vec<(f64, f64)>,
    /// Log-slope distortion of the optimal time change.
    pub l_lambda: f64,
    /// `sup_t |f(lambda(t)) - g(t)|` under that time change.
    pub sup_term: f64,
}

struct Gap {
    l: f64,
    sup: f64,
}

/// Cost of one linear stretch of the time change between consecutive anchors
/// `(fa, ga) -> (fb, gb)`, given as indices into the padded jump lists.
fn gap(
    f: &StepFunction,
    g: &StepFunction,
    s: &[f64],
    t: &[f64],
    (fa, ga): (usize, usize),
    (fb, gb): (usize, usize),
) -> Gap {
    let (ds, dt) = (s[fb] - s[fa], t[gb] - t[ga]);
    let l = (ds / dt).ln().abs();
    let to_g_time = |x: f64| t[ga] + (x - s[fa]) * dt / ds;
    // Pieces inside the stretch: f levels fa..fb, g levels ga..gb, each
    // separated by the unmatched jumps strictly between the anchors.
    let (mut i, mut j) = (fa, ga);
    let mut left = t[ga];
    let mut sup = 0.0f64;
    loop {
        let nf = if i + 1 < fb {
            to_g_time(s[i + 1])
        } else {
            t[gb]
        };
        let ng = if j + 1 < gb { t[j + 1] } else { t[gb] };
        let right = nf.min(ng);
        if right > left {
            sup = sup.max((f.levels()[i] - g.levels()[j]).abs());
        }
        if right >= t[gb] {
            break;
        }
        if nf == right {
            i += 1;
        }
        if ng == right {
            j += 1;
        }
        left = right;
    }
    Gap { l, sup }
}

/// Skorokhod J1 distance between step functions, minimized over time changes
/// that are piecewise linear through an order-preserving matching of the two
/// jump sets.
///
/// For a fixed matching the stretches between consecutive anchors are
/// independent: the distortion is the largest `|log slope|` and the sup term
/// the largest level gap, both maxima over stretches. The best matching is
/// therefore a bottleneck path through the anchor grid, found by dynamic
/// programming over `(last matched jump of f, last matched jump of g)`.
/// Unmatched jumps stay where the linear stretch puts them and are charged
/// through the level gap they create.
///
/// Worst case `O(p^2 q^2 (p + q))` for `p` and `q` jumps; pruning keeps it
/// practical up to a few dozen jumps per side.
pub fn skorokhod(f: &StepFunction, g: &StepFunction) -> SkorokhodResult {
    let p = f.num_jumps();
    let q = g.num_jumps();
    let s: Vec<f64> = std::iter::once(0.0)
        .chain(f.breakpoints().iter().copied())
        .chain(std::iter::once(1.0))
        .collect();
    let t: Vec<f64> = std::iter::once(0.0)
        .chain(g.breakpoints().iter().copied())
        .chain(std::iter::once(1.0))
        .collect();
    let (rows, cols) = (p + 2, q + 2);
    let idx = |a: usize, b: usize| a * cols + b;
    let mut best = vec![f64::INFINITY; rows * cols];
    let mut from = vec![usize::MAX; rows * cols];
    best[idx(0, 0)] = 0.0;
    // Anchor (a, b) with 1 <= a <= p, 1 <= b <= q matches jump a of f with
    // jump b of g; (p + 1, q + 1) is the right end point.
    for a in 0..=p {
        for b in 0..=q {
            if (a == 0) != (b == 0) {
                continue;
            }
            let here = best[idx(a, b)];
            if !here.is_finite() {
                continue;
            }
            let mut relax = |a2: usize, b2: usize| {
                let target = idx(a2, b2);
                let ds = s[a2] - s[a];
                let dt = t[b2] - t[b];
                // A stretch whose distortion alone already loses is skipped.
                if here.max((ds / dt).ln().abs()) >= best[target] {
                    return;
                }
                let c = gap(f, g, &s, &t, (a, b), (a2, b2));
                let val = here.max(c.l).max(c.sup);
                if val < best[target] {
                    best[target] = val;
                    from[target] = idx(a, b);
                }
            };
            for a2 in a + 1..=p {
                for b2 in b + 1..=q {
                    relax(a2, b2);
                }
            }
            relax(p + 1, q + 1);
        }
    }

    let end = idx(p + 1, q + 1);
    let mut anchors = vec![(p + 1, q + 1)];
    let mut cur = end;
    while from[cur] != usize::MAX {
        cur = from[cur];
        anchors.push((cur / cols, cur % cols));
    }
    anchors.reverse();
    let mut l_lambda = 0.0f64;
    let mut sup_term = 0.0f64;
    for w in anchors.windows(2) {
        let ((a, b), (a2, b2)) = (w[0], w[1]);
        let c = gap(f, g, &s, &t, (a, b), (a2, b2));
        l_lambda = l_lambda.max(c.l);
        sup_term = sup_term.max(c.sup);
    }
    let matching = anchors[1..anchors.len() - 1]
        .iter()
        .map(|&(a, b)| (s[a], t[b]))
        .collect();
    SkorokhodResult {
        distance: l_lambda.max(sup_term),
        matching,
        l_lambda,
        sup_term,
    }
}
