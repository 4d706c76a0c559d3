// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

//! Fixtures shared by the benchmarks.

use potts_core::{
    add_noise, generate, NoiseFamily, NoiseSpec, SampledSignal, SignalFamily, SignalSpec,
    StepFunction,
};

/// Three-jump step signal of length `n` with Gaussian noise at SNR 7.
pub fn noisy_step(n: usize, seed: u64) -> SampledSignal {
    noisy(SignalFamily::three_jump_step(), n, seed)
}

/// Blocks signal of length `n` with Gaussian noise at SNR 7.
pub fn noisy_blocks(n: usize, seed: u64) -> SampledSignal {
    noisy(SignalFamily::Blocks, n, seed)
}

fn noisy(family: SignalFamily, n: usize, seed: u64) -> SampledSignal {
    let clean = generate(&SignalSpec::new(family, n)).expect("valid signal spec");
    let sigma = potts_core::sigma_for_snr(&clean, 7.0).expect("nonzero signal");
    let spec = NoiseSpec::new(NoiseFamily::Gaussian, sigma, seed).expect("valid noise spec");
    add_noise(&clean, &spec)
}

/// Pure standard Gaussian noise of length `n`.
pub fn white_noise(n: usize, seed: u64) -> SampledSignal {
    let spec = NoiseSpec::new(NoiseFamily::Gaussian, 1.0, seed).expect("valid noise spec");
    add_noise(&SampledSignal::new(vec![0.0; n]).expect("n > 0"), &spec)
}

/// Pair of step functions with `k` jumps each at slightly perturbed
/// positions.
pub fn step_pair(k: usize) -> (StepFunction, StepFunction) {
    let make = |shift: f64| {
        let breaks: Vec<f64> = (1..=k)
            .map(|i| (i as f64 + shift * ((i % 3) as f64 - 1.0)) / (k + 1) as f64)
            .collect();
        let levels: Vec<f64> = (0..=k).map(|i| ((i * 7) % 5) as f64).collect();
        StepFunction::new(breaks, levels).expect("sorted breakpoints")
    };
    (make(0.0), make(0.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shape() {
        assert_eq!(noisy_step(100, 1).len(), 100);
        assert_eq!(noisy_blocks(64, 1).len(), 64);
        assert_eq!(white_noise(10, 1).len(), 10);
        let (f, g) = step_pair(16);
        assert_eq!((f.num_jumps(), g.num_jumps()), (16, 16));
    }
}
