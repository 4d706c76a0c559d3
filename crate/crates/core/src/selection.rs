// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data-driven choice of the jump penalty.
//!
//! Two rules are provided: the logarithmic rule
//! `gamma = C * sigma^2 * ln(n) / n` and the multiresolution (MR) rule, which
//! picks the largest penalty whose fit leaves residuals that look like noise
//! on every interval. Natural logarithms are used throughout.
//!
//! Constants `C > 6` give the almost-sure guarantees of the asymptotic
//! theory; `C` between 2 and 3 is the practical range and `C < 2` tends to
//! produce spurious jumps, which [`SelectionConfig::warnings`] reports.

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::potts::{fit_gamma, solve_path, HullVertex, Segmentation};
use crate::stepfn::SampledSignal;

/// Median of |N(0, 1)|, i.e. the 0.75 quantile of the standard normal.
const MAD_NORMAL_QUANTILE: f64 = 0.674489750196082;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    /// Median absolute first difference, rescaled for Gaussian noise. Robust
    /// to a minority of differences straddling jumps.
    MadDiff,
    /// Root mean squared first difference over `sqrt(2)`; biased upward by
    /// the jumps.
    MeanSqDiff,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalFamily {
    /// Every connected index interval, `n (n + 1) / 2` of them.
    All,
    /// Intervals `[j 2^l + 1, (j + 1) 2^l]` inside `1..=n`.
    Dyadic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Constant of the logarithmic rule.
    pub c_const: f64,
    /// Relative slack of the MR threshold `(1 + delta) sigma sqrt(2 ln n)`.
    pub delta: f64,
    pub interval_family: IntervalFamily,
    pub sigma_method: SigmaMethod,
    /// Deepest jump budget the MR search may explore; `None` means `n - 1`.
    pub k_max: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            c_const: 2.5,
            delta: 0.05,
            interval_family: IntervalFamily::All,
            sigma_method: SigmaMethod::MadDiff,
            k_max: None,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_const > 0.0 && self.c_const.is_finite()) {
            return Err(PottsError::invalid(format!(
                "c_const must be positive, got {}",
                self.c_const
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(PottsError::invalid(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if let SigmaMethod::Fixed(s) = self.sigma_method {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(PottsError::invalid(format!(
                    "fixed sigma must be >= 0, got {s}"
                )));
            }
        }
        if self.k_max == Some(0) {
            return Err(PottsError::invalid("k_max must be at least 1"));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.c_const < 2.0 {
            out.push(format!(
                "c_const = {} is below 2; the logarithmic rule is expected to over-segment",
                self.c_const
            ));
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Noise level estimate from first differences.
pub fn estimate_sigma(y: &SampledSignal, method: SigmaMethod) -> Result<f64> {
    let n = y.len();
    if n < 2 {
        return Err(PottsError::invalid(
            "noise estimation needs at least two samples",
        ));
    }
    let v = y.values();
    match method {
        SigmaMethod::MadDiff => {
            let mut diffs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            Ok(median(&mut diffs) / (std::f64::consts::SQRT_2 * MAD_NORMAL_QUANTILE))
        }
        SigmaMethod::MeanSqDiff => {
            let ss: f64 = v.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
            Ok((ss / (2.0 * (n - 1) as f64)).sqrt())
        }
        SigmaMethod::Fixed(s) => {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(PottsError::invalid(format!(
                    "fixed sigma must be >= 0, got {s}"
                )));
            }
            Ok(s)
        }
    }
}

/// `c_const * sigma^2 * ln(n) / n`.
pub fn log_penalty(n: usize, sigma: f64, c_const: f64) -> Result<f64> {
    if n < 2 {
        return Err(PottsError::invalid("the logarithmic rule needs n >= 2"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(PottsError::invalid(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if !(c_const > 0.0 && c_const.is_finite()) {
        return Err(PottsError::invalid(format!(
            "c_const must be positive, got {c_const}"
        )));
    }
    let nf = n as f64;
    Ok(c_const * sigma * sigma * nf.ln() / nf)
}

/// Outcome of the multiresolution residual test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MrCheck {
    pub pass: bool,
    /// 1-based inclusive index range attaining `worst_stat`.
    pub worst_interval: (usize, usize),
    /// Largest `|sum_{i in I} (y_i - fit_i)| / sqrt(#I)` over the family.
    pub worst_stat: f64,
}

fn residual_prefix(y: &[f64], fitted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for (a, b) in y.iter().zip(fitted) {
        acc += a - b;
        out.push(acc);
    }
    out
}

/// Scan of `|R[i + len] - R[i]|` over the family. With `stop_above` set the
/// scan returns as soon as one interval exceeds it.
fn scan_intervals(prefix: &[f64], family: IntervalFamily, stop_above: Option<f64>) -> MrCheck {
    let n = prefix.len() - 1;
    let mut worst = 0.0f64;
    let mut arg = (1, 1);
    let mut consider = |len: usize, starts: &mut dyn Iterator<Item = usize>| -> bool {
        let inv = 1.0 / (len as f64).sqrt();
        let mut peak = 0.0f64;
        let mut at = 0;
        for i in starts {
            let d = (prefix[i + len] - prefix[i]).abs();
            if d > peak {
                peak = d;
                at = i;
            }
        }
        let stat = peak * inv;
        if stat > worst {
            worst = stat;
            arg = (at + 1, at + len);
        }
        matches!(stop_above, Some(t) if worst > t)
    };
    match family {
        IntervalFamily::All => {
            for len in 1..=n {
                if consider(len, &mut (0..=n - len)) {
                    break;
                }
            }
        }
        IntervalFamily::Dyadic => {
            let mut len = 1;
            while len <= n {
                if consider(len, &mut (0..n / len).map(|j| j * len)) {
                    break;
                }
                len *= 2;
            }
        }
    }
    MrCheck {
        pass: stop_above.is_none_or(|t| worst <= t),
        worst_interval: arg,
        worst_stat: worst,
    }
}

/// Multiresolution test of the residuals `y - fit` against `threshold`.
pub fn mr_check(
    y: &SampledSignal,
    fit: &Segmentation,
    threshold: f64,
    family: IntervalFamily,
) -> Result<MrCheck> {
    if fit.n() != y.len() {
        return Err(PottsError::invalid(format!(
            "fit has {} samples, signal has {}",
            fit.n(),
            y.len()
        )));
    }
    let prefix = residual_prefix(y.values(), &fit.fitted_values());
    let mut out = scan_intervals(&prefix, family, None);
    out.pass = out.worst_stat <= threshold;
    Ok(out)
}

/// Result of the multiresolution penalty search.
#[derive(Clone, Debug, Serialize)]
pub struct MrSelection {
    /// Selected penalty; `+inf` when the constant fit already passes.
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub threshold: f64,
    pub fit: Segmentation,
    /// No fit up to the deepest explored budget passed; `fit` is the deepest.
    pub saturated: bool,
    pub worst_stat: f64,
    /// Jump budget of the last solution path computed.
    pub path_depth: usize,
}

/// Penalty reported for a hull vertex: the lower end of its penalty range, at
/// which the tie rule still selects this vertex.
fn representative_gamma(v: &HullVertex) -> f64 {
    if v.k == 0 {
        f64::INFINITY
    } else if v.gamma_lo > 0.0 {
        v.gamma_lo
    } else {
        0.5 * v.gamma_hi
    }
}

/// Largest-penalty fit on the solution path passing the MR test with
/// threshold `(1 + delta) sigma_hat sqrt(2 ln n)`.
///
/// The path is computed for a small jump budget first and deepened by
/// doubling only when needed. The first passing hull vertex of a truncated
/// path is certified by one penalized fit at its lower knot: if that fit has
/// the same number of jumps, the vertex is optimal on its whole penalty range
/// and every vertex above it is exact as well.
pub fn mr_select(y: &SampledSignal, cfg: &SelectionConfig) -> Result<MrSelection> {
    cfg.validate()?;
    let n = y.len();
    if n < 2 {
        return Err(PottsError::invalid("penalty selection needs n >= 2"));
    }
    let sigma_hat = estimate_sigma(y, cfg.sigma_method)?;
    let scale = y.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Exact fits still leave rounding-level residual sums.
    let roundoff = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) * (n as f64).sqrt();
    let threshold = (1.0 + cfg.delta) * sigma_hat * (2.0 * (n as f64).ln()).sqrt() + roundoff;

    let cap = cfg.k_max.unwrap_or(n - 1).clamp(1, n - 1);
    let mut depth = cap.min(8);
    loop {
        let path = solve_path(y, depth)?;
        let settled = path.is_complete() || depth == cap;
        let mut passing = None;
        for v in path.hull() {
            let fit = path.segmentation(v.k);
            let prefix = residual_prefix(y.values(), &fit.fitted_values());
            let check = scan_intervals(&prefix, cfg.interval_family, Some(threshold));
            if check.pass {
                passing = Some((*v, fit, check.worst_stat));
                break;
            }
        }
        match passing {
            Some((v, fit, worst_stat)) => {
                let exact = settled
                    || v.k == 0
                    || v.gamma_lo > path.exact_above()
                    || (v.gamma_lo > 0.0 && fit_gamma(y, v.gamma_lo)?.num_jumps() == v.k);
                if exact {
                    return Ok(MrSelection {
                        gamma_hat: representative_gamma(&v),
                        sigma_hat,
                        threshold,
                        fit,
                        saturated: false,
                        worst_stat,
                        path_depth: depth,
                    });
                }
            }
            None if settled => {
                let last = *path.hull().last().expect("hull is never empty");
                let fit = path.segmentation(depth);
                let check = mr_check(y, &fit, threshold, cfg.interval_family)?;
                return Ok(MrSelection {
                    gamma_hat: representative_gamma(&last),
                    sigma_hat,
                    threshold,
                    fit,
                    saturated: true,
                    worst_stat: check.worst_stat,
                    path_depth: depth,
                });
            }
            None => {}
        }
        depth = (2 * depth).min(cap);
    }
}

/// Maximal normalized squared partial sum
/// `sup_{i <= j} (xi_i + ... + xi_j)^2 / ((j - i + 1) ln n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CnReport {
    pub cn: f64,
    /// 1-based inclusive indices attaining the supremum.
    pub arg_i: usize,
    pub arg_j: usize,
}

/// Exact scan over all `n (n + 1) / 2` intervals, `O(n^2)` time, `O(n)` memory.
pub fn cn_statistic(xi: &SampledSignal) -> Result<CnReport> {
    let n = xi.len();
    if n < 2 {
        return Err(PottsError::invalid("C_n needs n >= 2 so that ln n > 0"));
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in xi.values() {
        acc += x;
        prefix.push(acc);
    }
    let mut best = 0.0f64;
    let (mut arg_i, mut arg_j) = (1, 1);
    for len in 1..=n {
        let hi = &prefix[len..];
        let lo = &prefix[..=n - len];
        // Branch-free max first; locate the argmax only when it matters.
        let peak = hi
            .iter()
            .zip(lo)
            .map(|(a, b)| (a - b) * (a - b))
            .fold(0.0f64, f64::max);
        let val = peak / len as f64;
        if val > best {
            best = val;
            let at = hi
                .iter()
                .zip(lo)
                .position(|(a, b)| (a - b) * (a - b) == peak)
                .unwrap_or(0);
            arg_i = at + 1;
            arg_j = at + len;
        }
    }
    Ok(CnReport {
        cn: best / (n as f64).ln(),
        arg_i,
        arg_j,
    })
}
