// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::Serialize;

use super::{LayeredDp, PrefixMoments, Segmentation};
use crate::error::{PottsError, Result};
use crate::stepfn::SampledSignal;

/// A jump count that is optimal for the Potts functional on the penalty range
/// `[gamma_lo, gamma_hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HullVertex {
    pub k: usize,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

/// Best fits for every jump budget `k = 0..=k_max` and the penalty intervals
/// on which each budget is optimal.
///
/// Only counts on the lower convex hull of `k -> rss_k / n` are optimal for
/// some penalty; the others are still reported since they answer the
/// constrained problem.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    values: Vec<f64>,
    rss: Vec<f64>,
    jumps: Vec<Vec<usize>>,
    hull: Vec<HullVertex>,
    complete: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Knot {
    pub gamma: f64,
    pub k: usize,
}

/// JSON layout of a solution path.
#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub n: usize,
    pub ks: Vec<usize>,
    pub rss: Vec<f64>,
    /// Hull vertices in order of decreasing penalty; `gamma` is the lower end
    /// of the penalty range on which `k` is optimal.
    pub knots: Vec<Knot>,
    pub complete: bool,
}

impl SolutionPath {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn k_max(&self) -> usize {
        self.rss.len() - 1
    }

    /// Optimal residual sum of squares with at most `k` jumps.
    pub fn rss(&self, k: usize) -> f64 {
        self.rss[k]
    }

    pub fn rss_values(&self) -> &[f64] {
        &self.rss
    }

    pub fn jumps(&self, k: usize) -> &[usize] {
        &self.jumps[k]
    }

    pub fn segmentation(&self, k: usize) -> Segmentation {
        Segmentation::from_jumps(&self.values, self.jumps[k].clone()).expect("path jumps are valid")
    }

    /// Hull vertices ordered by increasing `k` (decreasing penalty).
    pub fn hull(&self) -> &[HullVertex] {
        &self.hull
    }

    /// Positive penalty thresholds separating consecutive hull vertices, in
    /// decreasing order.
    pub fn knots(&self) -> Vec<f64> {
        self.hull.iter().skip(1).map(|v| v.gamma_hi).collect()
    }

    /// True when the path covers every penalty: either `k_max = n - 1` or the
    /// residual already reached zero.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Penalties strictly above this value are guaranteed to be resolved
    /// correctly by a truncated path. A minimizer with `m > k_max` jumps
    /// would need `gamma (m - k) <= rss_k / n` for every `k <= k_max`.
    pub fn exact_above(&self) -> f64 {
        if self.complete {
            return 0.0;
        }
        let nf = self.n() as f64;
        let top = self.k_max() + 1;
        self.rss
            .iter()
            .enumerate()
            .map(|(k, r)| r / (nf * (top - k) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Hull vertex selected by `gamma` (ties go to the fewer jumps).
    pub fn optimal_vertex(&self, gamma: f64) -> &HullVertex {
        self.hull
            .iter()
            .find(|v| gamma >= v.gamma_lo)
            .unwrap_or_else(|| self.hull.last().expect("hull is never empty"))
    }

    /// Potts functional value predicted by the hull at `gamma`.
    pub fn predicted_h(&self, gamma: f64) -> f64 {
        let n = self.n() as f64;
        self.hull
            .iter()
            .map(|v| self.rss[v.k] / n + gamma * v.k as f64)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn report(&self) -> PathReport {
        PathReport {
            n: self.n(),
            ks: (0..=self.k_max()).collect(),
            rss: self.rss.clone(),
            knots: self
                .hull
                .iter()
                .map(|v| Knot {
                    gamma: v.gamma_lo,
                    k: v.k,
                })
                .collect(),
            complete: self.complete,
        }
    }
}

/// Best fits for all jump budgets up to `k_max` via the layered program, and
/// their penalty intervals from the lower convex hull of `(k, rss_k / n)`.
pub fn solve_path(y: &SampledSignal, k_max: usize) -> Result<SolutionPath> {
    let n = y.len();
    if k_max < 1 || k_max > n - 1 {
        return Err(PottsError::invalid(format!(
            "k_max = {k_max} is outside 1..={}",
            n.saturating_sub(1)
        )));
    }
    let dp = LayeredDp::run(&PrefixMoments::new(y), k_max);
    let tol = dp.tol();

    let mut rss = Vec::with_capacity(k_max + 1);
    let mut jumps: Vec<Vec<usize>> = Vec::with_capacity(k_max + 1);
    let mut last_used = usize::MAX;
    for k in 0..=k_max {
        let used = dp.fewest_jumps_within(k);
        if used == last_used {
            let prev = jumps.last().unwrap().clone();
            rss.push(*rss.last().unwrap());
            jumps.push(prev);
            continue;
        }
        let seg = Segmentation::from_jumps(y.values(), dp.jumps_exact(used))?;
        rss.push(seg.rss());
        jumps.push(seg.jumps().to_vec());
        last_used = used;
    }

    let top = dp.fewest_jumps_within(k_max);
    let hull = lower_hull(&rss[..=top], n, tol);
    let complete = k_max == n - 1 || dp.exact_cost(top) <= tol;
    Ok(SolutionPath {
        values: y.values().to_vec(),
        rss,
        jumps,
        hull,
        complete,
    })
}

/// Lower convex hull of `(k, rss[k])`, dropping points on or above the chord
/// of their neighbours.
fn lower_hull(rss: &[f64], n: usize, tol: f64) -> Vec<HullVertex> {
    let mut idx: Vec<usize> = Vec::with_capacity(rss.len());
    for c in 0..rss.len() {
        while idx.len() >= 2 {
            let (a, b) = (idx[idx.len() - 2], idx[idx.len() - 1]);
            let chord = rss[a] + (rss[c] - rss[a]) * (b - a) as f64 / (c - a) as f64;
            if rss[b] >= chord - tol {
                idx.pop();
            } else {
                break;
            }
        }
        if let Some(&b) = idx.last() {
            if rss[c] >= rss[b] - tol {
                continue;
            }
        }
        idx.push(c);
    }
    let nf = n as f64;
    let mut hull = Vec::with_capacity(idx.len());
    for (pos, &k) in idx.iter().enumerate() {
        let gamma_hi = match pos {
            0 => f64::INFINITY,
            _ => {
                let p = idx[pos - 1];
                (rss[p] - rss[k]) / (nf * (k - p) as f64)
            }
        };
        let gamma_lo = match idx.get(pos + 1) {
            Some(&q) => (rss[k] - rss[q]) / (nf * (q - k) as f64),
            None => 0.0,
        };
        hull.push(HullVertex {
            k,
            gamma_lo,
            gamma_hi,
        });
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::{fit_gamma, fit_k};

    fn sig(v: &[f64]) -> SampledSignal {
        SampledSignal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_threshold() {
        let path = solve_path(&sig(&[0.0, 0.0, 1.0, 1.0]), 3).unwrap();
        assert_eq!(path.rss(0), 1.0);
        assert_eq!(path.rss(1), 0.0);
        assert_eq!(path.knots(), vec![0.25]);
        assert_eq!(path.hull()[0].k, 0);
        assert_eq!(path.hull()[0].gamma_lo, 0.25);
        assert_eq!(path.hull()[1].k, 1);
        assert_eq!(path.optimal_vertex(0.25).k, 0);
        assert_eq!(path.optimal_vertex(0.2499).k, 1);
        assert!(path.is_complete());
    }

    #[test]
    fn constant_signal_has_single_vertex() {
        let path = solve_path(&sig(&[2.0; 6]), 3).unwrap();
        assert_eq!(path.hull().len(), 1);
        assert_eq!(path.hull()[0].k, 0);
        assert!(path.knots().is_empty());
        assert!(path.is_complete());
    }

    #[test]
    fn rejects_bad_k_max() {
        let y = sig(&[0.0, 1.0, 2.0]);
        assert!(solve_path(&y, 0).is_err());
        assert!(solve_path(&y, 3).is_err());
        assert!(solve_path(&sig(&[1.0]), 1).is_err());
    }

    #[test]
    fn path_agrees_with_fit_k_and_fit_gamma() {
        let y = sig(&[0.3, 1.9, 2.2, -0.4, -0.1, 3.3, 3.0, 2.7, 0.2, 0.0, 0.5]);
        let path = solve_path(&y, 10).unwrap();
        for k in 0..=10 {
            let fk = fit_k(&y, k).unwrap();
            assert_eq!(path.jumps(k), fk.jumps());
            assert_eq!(path.rss(k), fk.rss());
        }
        for e in -30..10 {
            let gamma = 10f64.powf(e as f64 / 8.0);
            let fit = fit_gamma(&y, gamma).unwrap();
            assert!((fit.h_value(gamma) - path.predicted_h(gamma)).abs() < 1e-12);
            assert_eq!(fit.num_jumps(), path.optimal_vertex(gamma).k);
        }
    }

    #[test]
    fn truncated_path_reports_exactness_bound() {
        let y = sig(&[0.0, 5.0, 0.0, 5.0, 0.0, 5.0, 0.0, 5.0]);
        let path = solve_path(&y, 2).unwrap();
        assert!(!path.is_complete());
        assert!(path.exact_above() > 0.0);
    }
}
