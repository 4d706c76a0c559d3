// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{Segmentation, TIE_RTOL};
use crate::error::{PottsError, Result};
use crate::stepfn::SampledSignal;

/// Largest signal length accepted by [`brute_force_fit`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Exhaustive minimizer of the Potts functional over all `2^(n-1)` jump
/// patterns, sharing the tie rule of [`super::fit_gamma`].
///
/// Segment costs are computed with a two-pass mean/residual sum per pattern,
/// independently of the prefix-sum machinery used by the dynamic programs.
pub fn brute_force_fit(y: &SampledSignal, gamma: f64) -> Result<Segmentation> {
    let n = y.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(PottsError::Refused(format!(
            "exhaustive search over 2^{} jump patterns (n = {n} > {BRUTE_FORCE_MAX_N})",
            n - 1
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(PottsError::invalid(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let v = y.values();
    let patterns = 1usize << (n - 1);
    let mut scored = Vec::with_capacity(patterns);
    for mask in 0..patterns {
        let jumps: Vec<usize> = (1..n).filter(|j| mask & (1 << (j - 1)) != 0).collect();
        let seg = Segmentation::from_jumps(v, jumps)?;
        let h = seg.h_value(gamma);
        scored.push((h, seg));
    }

    let mean = v.iter().sum::<f64>() / n as f64;
    let total_ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    let tol = TIE_RTOL * total_ss / n as f64;
    let best = scored.iter().map(|(h, _)| *h).fold(f64::INFINITY, f64::min);
    let winner = scored
        .into_iter()
        .filter(|(h, _)| *h <= best + tol)
        .map(|(_, s)| s)
        .min_by(|a, b| {
            a.num_jumps()
                .cmp(&b.num_jumps())
                .then_with(|| a.jumps().cmp(b.jumps()))
        })
        .expect("at least one pattern");
    Ok(winner)
}
