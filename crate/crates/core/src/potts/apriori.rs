// SPDX-License-Identifier: MIT OR Apache-2.0

//! Necessary conditions satisfied by every minimizer of the Potts functional.
//!
//! Each inequality compares the fit with a competitor obtained by one local
//! move and states that the move cannot lower the functional. Lengths are in
//! units of `1/n` on `[0, 1)`, so every term is on the scale of the
//! functional itself.

use std::fmt;

use super::Segmentation;
use crate::stepfn::SampledSignal;

/// The local move whose optimality condition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inequality {
    /// Merging two adjacent plateaus: `gamma <= l l' / (l + l') (mu - mu')^2`.
    MergeNeighbours,
    /// Splitting a run out of a plateau with level `a`:
    /// `2 gamma >= l(I') (mu_I' - a)^2`.
    SplitRun,
    /// Shifting a jump across a run `I'` next to it:
    /// `(b - a)(mu_I' - (a + b) / 2) >= 0`.
    MoveJump,
    /// Dissolving an interior plateau into its two neighbours.
    RemovePlateau,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AprioriViolation {
    pub inequality: Inequality,
    /// 0-based index of the plateau where the check failed.
    pub segment: usize,
    /// Amount by which the inequality is violated, beyond the slack.
    pub excess: f64,
    pub detail: String,
}

impl fmt::Display for AprioriViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} violated at plateau {} by {:.3e}: {}",
            self.inequality, self.segment, self.excess, self.detail
        )
    }
}

impl std::error::Error for AprioriViolation {}

/// Checks the merge, split, move and removal inequalities of `fit` as a
/// minimizer of `H_gamma(., y)`, each with additive `slack`.
///
/// The split condition is scanned over every sub-run of every plateau, which
/// costs `O(sum of squared plateau lengths)`.
pub fn check_apriori(
    y: &SampledSignal,
    fit: &Segmentation,
    gamma: f64,
    slack: f64,
) -> Result<(), AprioriViolation> {
    let v = y.values();
    let n = v.len();
    let nf = n as f64;
    assert_eq!(fit.n(), n, "fit and signal lengths differ");
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in v {
        acc += x;
        prefix.push(acc);
    }
    let sum = |a: usize, b: usize| prefix[b] - prefix[a];
    let segs = fit.segments();
    let levels = fit.levels();
    // l(I) (mu_I - c)^2 for the run a..b
    let spread = |a: usize, b: usize, c: f64| {
        if a == b {
            0.0
        } else {
            let d = sum(a, b) - (b - a) as f64 * c;
            d * d / ((b - a) as f64 * nf)
        }
    };

    for (s, w) in segs.windows(2).enumerate() {
        let ((a, b), (_, c)) = (w[0], w[1]);
        let (m, m2) = ((b - a) as f64, (c - b) as f64);
        let (mu, mu2) = (sum(a, b) / m, sum(b, c) / m2);
        let bound = m * m2 / (nf * (m + m2)) * (mu - mu2) * (mu - mu2);
        if gamma > bound + slack {
            return Err(AprioriViolation {
                inequality: Inequality::MergeNeighbours,
                segment: s,
                excess: gamma - bound - slack,
                detail: format!(
                    "gamma {gamma} exceeds merge gain {bound} with plateau {}",
                    s + 1
                ),
            });
        }
    }

    let mut resid = Vec::new();
    for (s, (&(a, b), &level)) in segs.iter().zip(levels).enumerate() {
        resid.clear();
        resid.push(0.0);
        let mut r = 0.0;
        for &x in &v[a..b] {
            r += x - level;
            resid.push(r);
        }
        let m = b - a;
        for len in 1..=m {
            let peak = (0..=m - len)
                .map(|i| {
                    let d = resid[i + len] - resid[i];
                    d * d
                })
                .fold(0.0, f64::max);
            let stat = peak / (len as f64 * nf);
            if stat > 2.0 * gamma + slack {
                return Err(AprioriViolation {
                    inequality: Inequality::SplitRun,
                    segment: s,
                    excess: stat - 2.0 * gamma - slack,
                    detail: format!("a run of length {len} has l (mu - a)^2 = {stat} > 2 gamma"),
                });
            }
        }
    }

    for (s, w) in segs.windows(2).enumerate() {
        let ((a, b), (_, c)) = (w[0], w[1]);
        let (left, right) = (levels[s], levels[s + 1]);
        let mid = 0.5 * (left + right);
        for e in b + 1..=c {
            let val = (right - left) * (sum(b, e) / (e - b) as f64 - mid);
            if val < -slack {
                return Err(AprioriViolation {
                    inequality: Inequality::MoveJump,
                    segment: s + 1,
                    excess: -slack - val,
                    detail: format!("moving jump {b} to {e} lowers the functional"),
                });
            }
        }
        for st in a..b {
            let val = (left - right) * (sum(st, b) / (b - st) as f64 - mid);
            if val < -slack {
                return Err(AprioriViolation {
                    inequality: Inequality::MoveJump,
                    segment: s,
                    excess: -slack - val,
                    detail: format!("moving jump {b} to {st} lowers the functional"),
                });
            }
        }
    }

    for s in 1..segs.len().saturating_sub(1) {
        let (a, b) = segs[s];
        let (b1, b2, level) = (levels[s - 1], levels[s + 1], levels[s]);
        for split in a..=b {
            let removed = spread(a, split, b1) + spread(split, b, b2);
            let kept = gamma + spread(a, split, level) + spread(split, b, level);
            if removed < kept - slack {
                return Err(AprioriViolation {
                    inequality: Inequality::RemovePlateau,
                    segment: s,
                    excess: kept - slack - removed,
                    detail: format!(
                        "dissolving the plateau at split {split} lowers the functional"
                    ),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::fit_gamma;

    #[test]
    fn optimal_fit_passes() {
        let y =
            SampledSignal::new(vec![0.1, -0.2, 0.0, 2.1, 1.8, 2.0, 2.2, -1.0, -0.9, -1.2]).unwrap();
        for gamma in [0.01, 0.05, 0.2, 1.0] {
            let fit = fit_gamma(&y, gamma).unwrap();
            check_apriori(&y, &fit, gamma, 1e-9).unwrap();
        }
    }

    #[test]
    fn detects_each_move() {
        let y = SampledSignal::new(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        // Over-segmented: splitting a flat plateau never pays for a large gamma.
        let split = Segmentation::from_jumps(y.values(), vec![2, 4]).unwrap();
        let err = check_apriori(&y, &split, 0.5, 1e-9).unwrap_err();
        assert_eq!(err.inequality, Inequality::MergeNeighbours);

        // Under-segmented: the run of ones is far from the constant level.
        let flat = Segmentation::from_jumps(y.values(), vec![]).unwrap();
        let err = check_apriori(&y, &flat, 0.01, 1e-9).unwrap_err();
        assert_eq!(err.inequality, Inequality::SplitRun);

        // Misplaced jump with a penalty too small to object to the jump itself.
        let shifted = Segmentation::from_jumps(y.values(), vec![2]).unwrap();
        let err = check_apriori(&y, &shifted, 0.02, 1e-9).unwrap_err();
        assert!(matches!(
            err.inequality,
            Inequality::MoveJump | Inequality::SplitRun
        ));
    }

    #[test]
    fn detects_removable_plateau() {
        // A short middle plateau that pays a penalty larger than the fit it buys.
        let y = SampledSignal::new(vec![0.0, 0.0, 0.0, 0.3, 1.0, 1.0, 1.0]).unwrap();
        let fit = Segmentation::from_jumps(y.values(), vec![3, 4]).unwrap();
        let err = check_apriori(&y, &fit, 0.03, 1e-9).unwrap_err();
        assert!(matches!(
            err.inequality,
            Inequality::RemovePlateau | Inequality::MergeNeighbours
        ));
    }
}
