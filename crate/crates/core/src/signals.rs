// SPDX-License-Identifier: MIT OR Apache-2.0

//! Test signals and noise.
//!
//! The four classical test functions use the definitions of Donoho and
//! Johnstone (1994) as distributed with WaveLab. They are sampled at cell
//! midpoints `(i - 1/2) / n`; piecewise-constant truths given by explicit
//! jumps and levels are sampled by exact cell averages instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::stepfn::{SampledSignal, StepFunction};

const BLOCK_KNOTS: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SignalFamily {
    Blocks,
    Bumps,
    #[serde(rename = "heavisine")]
    HeaviSine,
    Doppler,
    Step {
        jumps: Vec<f64>,
        levels: Vec<f64>,
    },
    LipschitzRamp,
    Holder {
        alpha: f64,
    },
    BvExample,
}

impl SignalFamily {
    /// Three jumps at 1/4, 1/2, 3/4 with levels 0, 2, -1, 1; every plateau
    /// has length 1/4 and the jumps fall on every dyadic grid.
    pub fn three_jump_step() -> Self {
        SignalFamily::Step {
            jumps: vec![0.25, 0.5, 0.75],
            levels: vec![0.0, 2.0, -1.0, 1.0],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SignalFamily::Blocks => "blocks",
            SignalFamily::Bumps => "bumps",
            SignalFamily::HeaviSine => "heavisine",
            SignalFamily::Doppler => "doppler",
            SignalFamily::Step { .. } => "step",
            SignalFamily::LipschitzRamp => "lipschitz_ramp",
            SignalFamily::Holder { .. } => "holder",
            SignalFamily::BvExample => "bv_example",
        }
    }

    /// The truth as a step function, for the families that are one.
    pub fn step_function(&self) -> Option<Result<StepFunction>> {
        match self {
            SignalFamily::Step { jumps, levels } => {
                Some(StepFunction::new(jumps.clone(), levels.clone()))
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SignalFamily::Holder { alpha } if !(*alpha > 0.0 && *alpha <= 1.0) => Err(
                PottsError::invalid(format!("holder exponent must lie in (0, 1], got {alpha}")),
            ),
            SignalFamily::Step { .. } => self.step_function().unwrap().map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Pointwise value at `t` for the families sampled at midpoints.
    fn eval(&self, t: f64) -> f64 {
        match self {
            SignalFamily::Blocks => BLOCK_KNOTS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .filter(|(k, _)| t >= **k)
                .fold(0.0, |acc, (_, h)| acc + h),
            SignalFamily::Bumps => BLOCK_KNOTS
                .iter()
                .zip(BUMP_HEIGHTS)
                .zip(BUMP_WIDTHS)
                .map(|((k, h), w)| h * (1.0 + ((t - k) / w).abs()).powi(-4))
                .sum(),
            SignalFamily::HeaviSine => {
                4.0 * (4.0 * std::f64::consts::PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t)
            }
            SignalFamily::Doppler => {
                (t * (1.0 - t)).sqrt() * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
            }
            SignalFamily::LipschitzRamp => t,
            SignalFamily::Holder { alpha } => t.powf(*alpha),
            SignalFamily::BvExample => t / 2.0 + (4.0 * t).floor() / 6.0,
            SignalFamily::Step { .. } => unreachable!("step signals use cell averages"),
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub family: SignalFamily,
    pub n: usize,
}

impl SignalSpec {
    pub fn new(family: SignalFamily, n: usize) -> Self {
        Self { family, n }
    }
}

pub fn generate(spec: &SignalSpec) -> Result<SampledSignal> {
    let n = spec.n;
    if n == 0 {
        return Err(PottsError::invalid("signal length must be at least 1"));
    }
    spec.family.validate()?;
    let values = match spec.family.step_function() {
        Some(f) => cell_averages(&f?, n),
        None => {
            let nf = n as f64;
            (1..=n)
                .map(|i| spec.family.eval((i as f64 - 0.5) / nf))
                .collect()
        }
    };
    SampledSignal::new(values)
}

fn cell_averages(f: &StepFunction, n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut out = vec![0.0; n];
    for (left, right, level) in f.pieces() {
        let first = ((left * nf).floor() as usize).min(n - 1);
        let last = ((right * nf).ceil() as usize).min(n);
        for (i, cell) in out.iter_mut().enumerate().take(last).skip(first) {
            let lo = left.max(i as f64 / nf);
            let hi = right.min((i + 1) as f64 / nf);
            if hi > lo {
                *cell += level * (hi - lo) * nf;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// `+sigma` or `-sigma` with equal probability.
    Rademacher,
    /// Uniform on `[-sqrt(3) sigma, sqrt(3) sigma]`.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(PottsError::invalid(format!(
                "noise level must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self {
            family,
            sigma,
            seed,
        })
    }

    /// Largest possible `|xi|`, for the bounded families.
    pub fn range(&self) -> Option<f64> {
        match self.family {
            NoiseFamily::Gaussian => None,
            NoiseFamily::Rademacher => Some(self.sigma),
            NoiseFamily::Uniform => Some(3f64.sqrt() * self.sigma),
        }
    }

    /// Sub-Gaussian constant: `E exp(v xi) <= exp(beta v^2)`.
    pub fn beta(&self) -> f64 {
        match self.range() {
            None => self.sigma * self.sigma / 2.0,
            Some(c) => c * c / 2.0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// I.i.d. noise with standard deviation `sigma`, drawn from a ChaCha8 stream
/// seeded with `spec.seed`.
pub fn noise(n: usize, spec: &NoiseSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.sigma;
    match spec.family {
        NoiseFamily::Gaussian => (0..n)
            .map(|_| s * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        NoiseFamily::Rademacher => (0..n)
            .map(|_| if rng.random::<bool>() { s } else { -s })
            .collect(),
        NoiseFamily::Uniform => {
            let c = 3f64.sqrt() * s;
            (0..n).map(|_| rng.random_range(-c..=c)).collect()
        }
    }
}

pub fn add_noise(f: &SampledSignal, spec: &NoiseSpec) -> SampledSignal {
    if spec.sigma == 0.0 {
        return f.clone();
    }
    let xi = noise(f.len(), spec);
    let values = f.values().iter().zip(xi).map(|(a, b)| a + b).collect();
    SampledSignal::new(values).expect("finite signal plus finite noise")
}

/// Noise level giving `||f||^2 / sigma^2 = snr`, with the norm of the
/// embedded signal.
pub fn sigma_for_snr(f: &SampledSignal, snr: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(PottsError::invalid(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    let norm_sq = f.norm_sq();
    if norm_sq == 0.0 {
        return Err(PottsError::invalid(
            "signal-to-noise ratio is undefined for a zero signal",
        ));
    }
    Ok((norm_sq / snr).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(family: SignalFamily, n: usize) -> SampledSignal {
        generate(&SignalSpec::new(family, n)).unwrap()
    }

    #[test]
    fn step_cell_averages() {
        let f = SignalFamily::Step {
            jumps: vec![0.5],
            levels: vec![0.0, 1.0],
        };
        assert_eq!(gen(f, 4).values(), &[0.0, 0.0, 1.0, 1.0]);
        let f = SignalFamily::Step {
            jumps: vec![0.3],
            levels: vec![0.0, 1.0],
        };
        let v = gen(f, 4);
        assert!((v.values()[1] - 0.8).abs() < 1e-12);
        assert_eq!(v.values()[0], 0.0);
        assert_eq!(v.values()[2], 1.0);
    }

    #[test]
    fn three_jump_step_round_trips() {
        let y = gen(SignalFamily::three_jump_step(), 64);
        let e = y.embed();
        assert_eq!(e.breakpoints(), &[0.25, 0.5, 0.75]);
        assert_eq!(e.levels(), &[0.0, 2.0, -1.0, 1.0]);
    }

    #[test]
    fn blocks_has_eleven_jumps() {
        assert_eq!(gen(SignalFamily::Blocks, 2048).embed().num_jumps(), 11);
    }

    #[test]
    fn heavisine_has_two_jumps() {
        let y = gen(SignalFamily::HeaviSine, 2048);
        let big = y
            .values()
            .windows(2)
            .filter(|w| (w[1] - w[0]).abs() > 0.5)
            .count();
        assert_eq!(big, 2);
    }

    #[test]
    fn smooth_families() {
        let y = gen(SignalFamily::Holder { alpha: 1.0 }, 8);
        for (i, v) in y.values().iter().enumerate() {
            assert!((v - (i as f64 + 0.5) / 8.0).abs() < 1e-15);
        }
        assert_eq!(y, gen(SignalFamily::LipschitzRamp, 8));
        let d = gen(SignalFamily::Doppler, 1024);
        assert!(d.values().iter().all(|v| v.abs() <= 0.5));
        let b = gen(SignalFamily::Bumps, 1024);
        assert!(b.values().iter().all(|v| *v > 0.0));
        let bv = gen(SignalFamily::BvExample, 1024);
        let tv: f64 = bv.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        assert!(tv <= 1.0 && tv > 0.99);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&SignalSpec::new(SignalFamily::Blocks, 0)).is_err());
        assert!(generate(&SignalSpec::new(SignalFamily::Holder { alpha: 0.0 }, 8)).is_err());
        assert!(generate(&SignalSpec::new(SignalFamily::Holder { alpha: 1.5 }, 8)).is_err());
        let bad = SignalFamily::Step {
            jumps: vec![0.5],
            levels: vec![1.0],
        };
        assert!(generate(&SignalSpec::new(bad, 8)).is_err());
    }

    #[test]
    fn noise_examples() {
        let f = gen(SignalFamily::Blocks, 128);
        let zero = NoiseSpec::new(NoiseFamily::Gaussian, 0.0, 1).unwrap();
        assert_eq!(add_noise(&f, &zero), f);
        let r = NoiseSpec::new(NoiseFamily::Rademacher, 1.0, 9).unwrap();
        assert!(noise(1000, &r).iter().all(|x| x.abs() == 1.0));
        let g = NoiseSpec::new(NoiseFamily::Gaussian, 1.0, 42).unwrap();
        assert_eq!(add_noise(&f, &g), add_noise(&f, &g));
        assert_ne!(add_noise(&f, &g), add_noise(&f, &g.with_seed(43)));
        assert!(NoiseSpec::new(NoiseFamily::Gaussian, -1.0, 0).is_err());
    }

    #[test]
    fn beta_constants() {
        let g = NoiseSpec::new(NoiseFamily::Gaussian, 2.0, 0).unwrap();
        assert_eq!(g.beta(), 2.0);
        let r = NoiseSpec::new(NoiseFamily::Rademacher, 2.0, 0).unwrap();
        assert_eq!(r.beta(), 2.0);
        let u = NoiseSpec::new(NoiseFamily::Uniform, 2.0, 0).unwrap();
        assert!((u.beta() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_noise_stays_in_range() {
        let u = NoiseSpec::new(NoiseFamily::Uniform, 1.5, 3).unwrap();
        let c = u.range().unwrap();
        assert!(noise(10_000, &u).iter().all(|x| x.abs() <= c));
    }

    #[test]
    fn moments_per_family() {
        for family in [
            NoiseFamily::Gaussian,
            NoiseFamily::Rademacher,
            NoiseFamily::Uniform,
        ] {
            for seed in 0..20 {
                let xi = noise(100_000, &NoiseSpec::new(family, 1.0, seed).unwrap());
                let n = xi.len() as f64;
                let mean = xi.iter().sum::<f64>() / n;
                let sd =
                    (xi.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
                assert!(mean.abs() <= 0.02, "{family:?} seed {seed}: mean {mean}");
                assert!(
                    (0.99..=1.01).contains(&sd),
                    "{family:?} seed {seed}: sd {sd}"
                );
            }
        }
    }

    #[test]
    fn snr_examples() {
        let f = SampledSignal::new(vec![7f64.sqrt(); 5]).unwrap();
        assert!((sigma_for_snr(&f, 7.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((sigma_for_snr(&f, 1.0).unwrap() - 7f64.sqrt()).abs() < 1e-15);
        let b = gen(SignalFamily::Blocks, 2048);
        let s = sigma_for_snr(&b, 4.0).unwrap();
        assert!((b.norm_sq() / (s * s) - 4.0).abs() < 1e-12);
        assert!(sigma_for_snr(&SampledSignal::new(vec![0.0; 3]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = SignalSpec::new(SignalFamily::Holder { alpha: 0.5 }, 16);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"family":"holder","alpha":0.5,"n":16}"#);
        assert_eq!(serde_json::from_str::<SignalSpec>(&s).unwrap(), spec);
    }
}
