// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact minimizers of the Potts functional.
//!
//! All programs work on the raw residual sum of squares; the functional's
//! `1/n` normalization is converted into a per-jump penalty `lambda = n * gamma`
//! in [`fit_gamma`] and nowhere else.
//!
//! Ties are resolved by the fewest jumps first, then by the lexicographically
//! smallest sequence of jump indices. Objective values closer than
//! [`TIE_RTOL`] times the total sum of squares are treated as tied so that
//! rounding noise in the prefix sums cannot break the rule.

mod apriori;
mod oracle;
mod path;

pub use apriori::{check_apriori, AprioriViolation, Inequality};
pub use oracle::{brute_force_fit, BRUTE_FORCE_MAX_N};
pub use path::{solve_path, HullVertex, SolutionPath};

use serde::Serialize;

use crate::error::{PottsError, Result};
use crate::stepfn::{SampledSignal, StepFunction};

/// Relative width of the tie band, measured against the total sum of squares.
pub const TIE_RTOL: f64 = 1e-11;

/// Prefix sums of the samples and their squares, for O(1) segment costs.
///
/// Samples are centered at their mean before accumulation; segment costs are
/// shift invariant and centering keeps `(sum y)^2 / len` from cancelling
/// catastrophically on long near-constant runs.
#[derive(Clone, Debug)]
pub struct PrefixMoments {
    cum: Vec<f64>,
    cumsq: Vec<f64>,
    inv_len: Vec<f64>,
    shift: f64,
}

impl PrefixMoments {
    pub fn new(y: &SampledSignal) -> Self {
        Self::from_values(y.values())
    }

    pub(crate) fn from_values(y: &[f64]) -> Self {
        let n = y.len();
        let shift = y.iter().sum::<f64>() / n as f64;
        let mut cum = Vec::with_capacity(n + 1);
        let mut cumsq = Vec::with_capacity(n + 1);
        let (mut s, mut q) = (0.0, 0.0);
        cum.push(0.0);
        cumsq.push(0.0);
        for &v in y {
            let c = v - shift;
            s += c;
            q += c * c;
            cum.push(s);
            cumsq.push(q);
        }
        let inv_len = (0..=n)
            .map(|l| if l == 0 { 0.0 } else { 1.0 / l as f64 })
            .collect();
        Self {
            cum,
            cumsq,
            inv_len,
            shift,
        }
    }

    pub fn len(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cumulative sums of the centered samples; `cum()[0] == 0`.
    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    /// Cumulative sums of squared centered samples; `cumsq()[0] == 0`.
    pub fn cumsq(&self) -> &[f64] {
        &self.cumsq
    }

    /// The value subtracted from every sample before accumulation.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Least-squares cost of fitting one constant to `y_i..=y_j` (1-based,
    /// inclusive).
    pub fn segment_cost(&self, i: usize, j: usize) -> Result<f64> {
        if i < 1 || i > j || j > self.len() {
            return Err(PottsError::invalid(format!(
                "segment ({i}, {j}) is not within 1 <= i <= j <= {}",
                self.len()
            )));
        }
        Ok(self.cost(i - 1, j))
    }

    /// Cost of the half-open, 0-based run `start..end`.
    #[inline(always)]
    pub(crate) fn cost(&self, start: usize, end: usize) -> f64 {
        let s = self.cum[end] - self.cum[start];
        let q = self.cumsq[end] - self.cumsq[start];
        (q - s * s * self.inv_len[end - start]).max(0.0)
    }

    pub(crate) fn tie_tolerance(&self) -> f64 {
        TIE_RTOL * self.cost(0, self.len())
    }
}

/// A discrete minimizer: jump positions, per-segment means and the residual
/// sum of squares.
///
/// A jump `j` separates `y_j` from `y_{j+1}` (1-based), so `jumps` is a
/// strictly increasing subset of `1..n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segmentation {
    n: usize,
    jumps: Vec<usize>,
    levels: Vec<f64>,
    rss: f64,
}

impl Segmentation {
    /// Least-squares levels for a given jump set; the residual sum of squares
    /// is recomputed directly from the levels.
    pub fn from_jumps(y: &[f64], jumps: Vec<usize>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(PottsError::invalid("cannot segment an empty signal"));
        }
        if jumps.windows(2).any(|w| w[0] >= w[1]) || jumps.iter().any(|&j| j == 0 || j >= n) {
            return Err(PottsError::invalid(format!(
                "jumps {jumps:?} are not strictly increasing within 1..{n}"
            )));
        }
        let mut levels = Vec::with_capacity(jumps.len() + 1);
        let mut rss = 0.0;
        for (a, b) in bounds(&jumps, n) {
            let run = &y[a..b];
            let len = run.len() as f64;
            let rough = run.iter().sum::<f64>() / len;
            let mean = rough + run.iter().map(|v| v - rough).sum::<f64>() / len;
            rss += run.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            levels.push(mean);
        }
        Ok(Self {
            n,
            jumps,
            levels,
            rss,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn num_jumps(&self) -> usize {
        self.jumps.len()
    }

    /// Value of the Potts functional, `rss/n + gamma * #J`.
    pub fn h_value(&self, gamma: f64) -> f64 {
        self.rss / self.n as f64 + gamma * self.jumps.len() as f64
    }

    /// Half-open, 0-based sample ranges of the segments.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        bounds(&self.jumps, self.n).collect()
    }

    pub fn fitted_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for ((a, b), &v) in bounds(&self.jumps, self.n).zip(&self.levels) {
            out.extend(std::iter::repeat_n(v, b - a));
        }
        out
    }

    pub fn to_step_function(&self) -> StepFunction {
        let n = self.n as f64;
        let bps = self.jumps.iter().map(|&j| j as f64 / n).collect();
        // Levels of an exact minimizer never repeat across a jump, and the
        // constructor merges any that do.
        StepFunction::new(bps, self.levels.clone()).expect("grid jumps are valid breakpoints")
    }
}

fn bounds(jumps: &[usize], n: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let starts = std::iter::once(0).chain(jumps.iter().copied());
    let ends = jumps.iter().copied().chain(std::iter::once(n));
    starts.zip(ends)
}

/// Jump set minimizing `rss + lambda * #J` under the tie rule.
///
/// Suffix recursion: `best[i]` is the optimum over `y[i..]`. Scanning the
/// first segment end in increasing order and only replacing the incumbent on
/// a strict improvement yields the lexicographically smallest optimum.
pub(crate) fn penalized_jumps(m: &PrefixMoments, lambda: f64) -> Vec<usize> {
    let n = m.len();
    let tol = m.tie_tolerance();
    let mut value = vec![0.0f64; n + 1];
    let mut count = vec![0u32; n + 1];
    let mut next = vec![n; n + 1];
    for i in (0..n).rev() {
        let mut bv = m.cost(i, n);
        let mut bc = 0u32;
        let mut bj = n;
        for j in i + 1..n {
            let v = m.cost(i, j) + lambda + value[j];
            if v < bv - tol {
                bv = v;
                bc = count[j] + 1;
                bj = j;
            } else if v <= bv + tol && count[j] + 1 < bc {
                bv = bv.min(v);
                bc = count[j] + 1;
                bj = j;
            }
        }
        value[i] = bv;
        count[i] = bc;
        next[i] = bj;
    }
    let mut jumps = Vec::with_capacity(count[0] as usize);
    let mut i = 0;
    while next[i] < n {
        i = next[i];
        jumps.push(i);
    }
    jumps
}

/// Optimal costs with exactly `l` jumps for `l = 0..=k_max`, with the argmin
/// of the first segment end stored per layer for reconstruction.
pub(crate) struct LayeredDp {
    n: usize,
    values: Vec<Vec<f64>>,
    next: Vec<Vec<u32>>,
    tol: f64,
}

impl LayeredDp {
    pub(crate) fn run(m: &PrefixMoments, k_max: usize) -> Self {
        let n = m.len();
        debug_assert!(k_max < n);
        let tol = m.tie_tolerance();
        let mut values = Vec::with_capacity(k_max + 1);
        let mut next = Vec::with_capacity(k_max + 1);
        values.push((0..n).map(|i| m.cost(i, n)).collect::<Vec<_>>());
        next.push(vec![n as u32; n]);
        for l in 1..=k_max {
            let prev = &values[l - 1];
            let mut cur = vec![f64::INFINITY; n];
            let mut arg = vec![0u32; n];
            // y[i..] must hold at least l + 1 samples and the remainder y[j..]
            // at least l.
            for i in 0..n - l {
                let mut bv = f64::INFINITY;
                let mut bj = 0;
                for (j, &tail) in prev.iter().enumerate().take(n - l + 1).skip(i + 1) {
                    let v = m.cost(i, j) + tail;
                    if v < bv - tol {
                        bv = v;
                        bj = j;
                    }
                }
                cur[i] = bv;
                arg[i] = bj as u32;
            }
            values.push(cur);
            next.push(arg);
        }
        Self {
            n,
            values,
            next,
            tol,
        }
    }

    /// Optimal residual sum of squares with exactly `l` jumps.
    pub(crate) fn exact_cost(&self, l: usize) -> f64 {
        self.values[l][0]
    }

    /// Smallest jump count whose exact optimum is tied with the best
    /// achievable with at most `k` jumps.
    pub(crate) fn fewest_jumps_within(&self, k: usize) -> usize {
        let best = (0..=k)
            .map(|l| self.exact_cost(l))
            .fold(f64::INFINITY, f64::min);
        (0..=k)
            .find(|&l| self.exact_cost(l) <= best + self.tol)
            .unwrap_or(k)
    }

    pub(crate) fn jumps_exact(&self, l: usize) -> Vec<usize> {
        let mut jumps = Vec::with_capacity(l);
        let mut i = 0usize;
        for layer in (1..=l).rev() {
            i = self.next[layer][i] as usize;
            jumps.push(i);
        }
        debug_assert!(jumps.last().is_none_or(|&j| j < self.n));
        jumps
    }

    pub(crate) fn tol(&self) -> f64 {
        self.tol
    }
}

/// Least-squares fit with at most `k` jumps, using the fewest jumps that
/// attain the optimum.
pub fn fit_k(y: &SampledSignal, k: usize) -> Result<Segmentation> {
    let n = y.len();
    if k > n - 1 {
        return Err(PottsError::invalid(format!(
            "jump budget {k} exceeds n - 1 = {}",
            n - 1
        )));
    }
    let dp = LayeredDp::run(&PrefixMoments::new(y), k);
    let used = dp.fewest_jumps_within(k);
    Segmentation::from_jumps(y.values(), dp.jumps_exact(used))
}

/// Exact minimizer of `H_gamma(u, y) = (1/n) sum (u_i - y_i)^2 + gamma * #J(u)`.
pub fn fit_gamma(y: &SampledSignal, gamma: f64) -> Result<Segmentation> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(PottsError::invalid(format!(
            "gamma must be positive and finite, got {gamma}; use fit_k(y, n - 1) for interpolation"
        )));
    }
    let lambda = y.len() as f64 * gamma;
    let jumps = penalized_jumps(&PrefixMoments::new(y), lambda);
    Segmentation::from_jumps(y.values(), jumps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[f64]) -> SampledSignal {
        SampledSignal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn segment_cost_examples() {
        let m = PrefixMoments::new(&sig(&[5.0]));
        assert_eq!(m.segment_cost(1, 1).unwrap(), 0.0);
        let m = PrefixMoments::new(&sig(&[0.0, 1.0]));
        assert!((m.segment_cost(1, 2).unwrap() - 0.5).abs() < 1e-15);
        let m = PrefixMoments::new(&sig(&[2.0, 2.0, 2.0]));
        assert_eq!(m.segment_cost(1, 3).unwrap(), 0.0);
        assert!(m.segment_cost(0, 1).is_err());
        assert!(m.segment_cost(2, 1).is_err());
        assert!(m.segment_cost(1, 4).is_err());
    }

    #[test]
    fn prefix_moment_invariants() {
        let m = PrefixMoments::new(&sig(&[3.0, -1.0, 4.0, 1.0, -5.0]));
        assert_eq!(m.cum()[0], 0.0);
        assert_eq!(m.cumsq()[0], 0.0);
        assert!(m.cumsq().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fit_k_examples() {
        let s = fit_k(&sig(&[0.0, 0.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(s.jumps(), &[2]);
        assert_eq!(s.levels(), &[0.0, 1.0]);
        assert_eq!(s.rss(), 0.0);

        let s = fit_k(&sig(&[1.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(s.jumps(), &[1]);
        assert_eq!(s.levels(), &[1.0, 2.5]);
        assert!((s.rss() - 0.5).abs() < 1e-15);

        let y = sig(&[4.0, -2.0, 7.5, 0.25]);
        let s = fit_k(&y, 0).unwrap();
        assert!(s.jumps().is_empty());
        assert!((s.levels()[0] - 2.4375).abs() < 1e-15);

        assert!(fit_k(&y, 4).is_err());
    }

    #[test]
    fn fit_k_stops_at_fewest_jumps() {
        let s = fit_k(&sig(&[0.0, 0.0, 1.0, 1.0, 1.0]), 3).unwrap();
        assert_eq!(s.jumps(), &[2]);
    }

    #[test]
    fn fit_gamma_examples() {
        let y = sig(&[0.0, 0.0, 1.0, 1.0]);
        let s = fit_gamma(&y, 0.1).unwrap();
        assert_eq!(s.jumps(), &[2]);
        assert_eq!(s.levels(), &[0.0, 1.0]);
        assert!((s.h_value(0.1) - 0.1).abs() < 1e-15);

        let s = fit_gamma(&y, 0.3).unwrap();
        assert!(s.jumps().is_empty());
        assert_eq!(s.levels(), &[0.5]);
        assert!((s.h_value(0.3) - 0.25).abs() < 1e-15);

        let c = sig(&[1.7; 9]);
        for gamma in [1e-6, 0.1, 50.0] {
            let s = fit_gamma(&c, gamma).unwrap();
            assert!(s.jumps().is_empty());
            assert_eq!(s.levels(), &[1.7]);
            assert_eq!(s.h_value(gamma), 0.0);
        }
    }

    #[test]
    fn fit_gamma_rejects_bad_gamma() {
        let y = sig(&[0.0, 1.0]);
        for g in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                fit_gamma(&y, g),
                Err(PottsError::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn segmentation_accessors() {
        let s = Segmentation::from_jumps(&[1.0, 1.0, 4.0, 6.0], vec![2]).unwrap();
        assert_eq!(s.segments(), vec![(0, 2), (2, 4)]);
        assert_eq!(s.fitted_values(), vec![1.0, 1.0, 5.0, 5.0]);
        assert!((s.rss() - 2.0).abs() < 1e-15);
        let f = s.to_step_function();
        assert_eq!(f.breakpoints(), &[0.5]);
        assert!(Segmentation::from_jumps(&[1.0, 2.0], vec![2]).is_err());
        assert!(Segmentation::from_jumps(&[1.0, 2.0, 3.0], vec![2, 1]).is_err());
    }

    #[test]
    fn single_sample() {
        let y = sig(&[3.5]);
        let s = fit_gamma(&y, 1.0).unwrap();
        assert_eq!(s.levels(), &[3.5]);
        assert_eq!(fit_k(&y, 0).unwrap().levels(), &[3.5]);
    }
}
