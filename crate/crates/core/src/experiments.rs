// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo harness for rates, jump recovery, penalty agreement and the
//! noise statistic `C_n`.
//!
//! Replicate `r` at grid position `i` uses the seed
//! `base_seed ^ (i << 32) ^ r` for its noise. Replicates run in parallel on
//! the ambient rayon pool; results are always ordered by `(n, replicate)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::metrics::{hausdorff, skorokhod, JumpSet};
use crate::potts::{check_apriori, fit_gamma, Segmentation};
use crate::selection::{
    cn_statistic, estimate_sigma, log_penalty, mr_select, SelectionConfig, SigmaMethod,
};
use crate::signals::{
    add_noise, generate, noise, sigma_for_snr, NoiseFamily, NoiseSpec, SignalFamily, SignalSpec,
};
use crate::stepfn::{l2_distance, SampledSignal, StepFunction};

/// Additive slack of the optimality checks run on sampled replicates.
pub const APRIORI_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyRule {
    /// `gamma = c sigma_hat^2 ln(n) / n`.
    LogRule {
        c: f64,
    },
    /// Multiresolution selection with threshold slack `delta`.
    Mr {
        delta: f64,
    },
    Fixed {
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L2,
    Hausdorff,
    Skorokhod,
    JumpCount,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::Hausdorff => "hausdorff",
            Metric::Skorokhod => "skorokhod",
            Metric::JumpCount => "jump_count",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// `||f||^2 / sigma^2`, evaluated separately at every `n`.
    Snr(f64),
    Sigma(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub signal: SignalFamily,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub noise_level: NoiseLevel,
    pub noise_family: NoiseFamily,
    pub penalty: PenaltyRule,
    pub sigma_method: SigmaMethod,
    pub metrics: Vec<Metric>,
    pub base_seed: u64,
    /// Run the optimality checks on every `check_every`-th replicate; 0
    /// disables them.
    pub check_every: usize,
}

impl RateExperimentConfig {
    /// Log rule with `C = 2.5`, MAD noise estimate, Gaussian noise, checks on
    /// a 5% subsample.
    pub fn new(signal: SignalFamily, n_grid: Vec<usize>, replicates: usize, snr: f64) -> Self {
        Self {
            signal,
            n_grid,
            replicates,
            noise_level: NoiseLevel::Snr(snr),
            noise_family: NoiseFamily::Gaussian,
            penalty: PenaltyRule::LogRule { c: 2.5 },
            sigma_method: SigmaMethod::MadDiff,
            metrics: vec![Metric::L2],
            base_seed: 0,
            check_every: 20,
        }
    }

    fn validate(&self, min_grid: usize) -> Result<()> {
        if self.n_grid.len() < min_grid {
            return Err(PottsError::invalid(format!(
                "n_grid needs at least {min_grid} entries"
            )));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PottsError::invalid("n_grid must be strictly increasing"));
        }
        if self.n_grid.first().is_some_and(|&n| n < 2) {
            return Err(PottsError::invalid("every n must be at least 2"));
        }
        if self.replicates == 0 {
            return Err(PottsError::invalid("replicates must be at least 1"));
        }
        if self.metrics.is_empty() {
            return Err(PottsError::invalid("at least one metric is required"));
        }
        match self.noise_level {
            NoiseLevel::Snr(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(PottsError::invalid(format!(
                    "snr must be positive, got {s}"
                )))
            }
            NoiseLevel::Sigma(s) if !(s >= 0.0 && s.is_finite()) => {
                return Err(PottsError::invalid(format!("sigma must be >= 0, got {s}")))
            }
            _ => {}
        }
        match self.penalty {
            PenaltyRule::LogRule { c } if !(c > 0.0 && c.is_finite()) => Err(PottsError::invalid(
                format!("log-rule constant must be positive, got {c}"),
            )),
            PenaltyRule::Mr { delta } if !(delta > 0.0 && delta.is_finite()) => Err(
                PottsError::invalid(format!("delta must be positive, got {delta}")),
            ),
            PenaltyRule::Fixed { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                PottsError::invalid(format!("gamma must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }
}

pub fn replicate_seed(base_seed: u64, n_index: usize, replicate: usize) -> u64 {
    base_seed ^ ((n_index as u64) << 32) ^ replicate as u64
}

/// Minimizer for `gamma >= 0`; at `gamma = 0` the limit of the minimizers as
/// the penalty decreases to zero, i.e. the data with runs of equal values
/// merged.
fn penalized_fit(y: &SampledSignal, gamma: f64) -> Result<Segmentation> {
    if gamma > 0.0 {
        return fit_gamma(y, gamma);
    }
    let v = y.values();
    let jumps = (1..v.len()).filter(|&j| v[j - 1] != v[j]).collect();
    Segmentation::from_jumps(v, jumps)
}

/// One noisy sample of the truth together with its fit.
struct Replicate {
    clean: SampledSignal,
    y: SampledSignal,
    fit: Segmentation,
    /// Penalty at which `fit` minimizes the functional, when it does.
    gamma: Option<f64>,
}

fn noisy_sample(
    clean: &SampledSignal,
    level: NoiseLevel,
    family: NoiseFamily,
    seed: u64,
) -> Result<SampledSignal> {
    let sigma = match level {
        NoiseLevel::Snr(snr) => sigma_for_snr(clean, snr)?,
        NoiseLevel::Sigma(s) => s,
    };
    Ok(add_noise(clean, &NoiseSpec::new(family, sigma, seed)?))
}

fn fit_by_rule(
    y: &SampledSignal,
    rule: PenaltyRule,
    sigma_method: SigmaMethod,
) -> Result<(Segmentation, Option<f64>)> {
    match rule {
        PenaltyRule::LogRule { c } => {
            let sigma_hat = estimate_sigma(y, sigma_method)?;
            let gamma = log_penalty(y.len(), sigma_hat, c)?;
            Ok((penalized_fit(y, gamma)?, Some(gamma).filter(|g| *g > 0.0)))
        }
        PenaltyRule::Mr { delta } => {
            let cfg = SelectionConfig {
                delta,
                sigma_method,
                ..SelectionConfig::default()
            };
            let sel = mr_select(y, &cfg)?;
            let gamma = Some(sel.gamma_hat).filter(|g| g.is_finite() && !sel.saturated);
            Ok((sel.fit, gamma))
        }
        PenaltyRule::Fixed { gamma } => Ok((fit_gamma(y, gamma)?, Some(gamma))),
    }
}

fn run_replicate(
    cfg: &RateExperimentConfig,
    clean: &SampledSignal,
    seed: u64,
) -> Result<Replicate> {
    let y = noisy_sample(clean, cfg.noise_level, cfg.noise_family, seed)?;
    let (fit, gamma) = fit_by_rule(&y, cfg.penalty, cfg.sigma_method)?;
    Ok(Replicate {
        clean: clean.clone(),
        y,
        fit,
        gamma,
    })
}

/// Runs the optimality checks when this replicate is in the subsample.
/// Returns whether a check ran.
fn spot_check(
    rep: &Replicate,
    replicate: usize,
    every: usize,
) -> std::result::Result<bool, String> {
    if every == 0 || replicate % every != 0 {
        return Ok(false);
    }
    let Some(gamma) = rep.gamma else {
        return Ok(false);
    };
    check_apriori(&rep.y, &rep.fit, gamma, APRIORI_SLACK)
        .map(|()| true)
        .map_err(|v| v.to_string())
}

fn metric_value(metric: Metric, fit: &StepFunction, truth: &StepFunction) -> f64 {
    match metric {
        Metric::L2 => l2_distance(fit, truth),
        Metric::Hausdorff => hausdorff(&JumpSet::from(fit), &JumpSet::from(truth)),
        Metric::Skorokhod => skorokhod(fit, truth).distance,
        Metric::JumpCount => fit.num_jumps() as f64,
    }
}

/// Runs `body` for every `(n index, replicate)` pair in parallel, in a fixed
/// output order. Errors carry the replicate's seed.
fn sweep<T: Send>(
    cfg: &RateExperimentConfig,
    body: impl Fn(usize, &SampledSignal, usize, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let cleans = cfg
        .n_grid
        .iter()
        .map(|&n| generate(&SignalSpec::new(cfg.signal.clone(), n)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(i, r)| {
            let seed = replicate_seed(cfg.base_seed, i, r);
            body(i, &cleans[i], r, seed).map_err(|e| match e {
                PottsError::Replicate { .. } => e,
                other => PottsError::Replicate {
                    seed,
                    message: other.to_string(),
                },
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RawRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
    pub jumps: usize,
    /// Penalty used for the fit; `None` when the fit is not a minimizer for a
    /// finite positive penalty.
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateSummary {
    pub n: usize,
    pub metric: Metric,
    pub mean: f64,
    /// Standard error of the mean; needs at least two replicates.
    pub std_err: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Needs at least three grid points.
    pub slope_std_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSlope {
    pub metric: Metric,
    /// `None` when some mean is zero or the grid is too short.
    pub fit: Option<LogLogFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateExperimentResult {
    pub summaries: Vec<RateSummary>,
    pub slopes: Vec<MetricSlope>,
    #[serde(skip)]
    pub raw: Vec<RawRow>,
    /// Replicates on which the optimality checks ran and passed.
    pub checks_passed: usize,
}

impl RateExperimentResult {
    pub fn slope(&self, metric: Metric) -> Option<LogLogFit> {
        self.slopes
            .iter()
            .find(|s| s.metric == metric)
            .and_then(|s| s.fit)
    }

    pub fn means(&self, metric: Metric) -> Vec<(usize, f64)> {
        self.summaries
            .iter()
            .filter(|s| s.metric == metric)
            .map(|s| (s.n, s.mean))
            .collect()
    }

    /// One row per `(n, replicate, metric)`.
    pub fn raw_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .raw
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.replicate.to_string(),
                    r.seed.to_string(),
                    r.metric.name().to_string(),
                    r.value.to_string(),
                    r.jumps.to_string(),
                    r.gamma.map(|g| g.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        crate::io::table_to_csv(
            &[
                "n",
                "replicate",
                "seed",
                "metric",
                "value",
                "jumps",
                "gamma",
            ],
            &rows,
        )
    }
}

fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, Some((var / m).sqrt()))
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn log_log_fit(points: &[(usize, f64)]) -> Option<LogLogFit> {
    if points.len() < 2 || points.iter().any(|&(_, y)| !(y > 0.0 && y.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(x, _)| (x as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_err = (points.len() > 2).then(|| {
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (sse / (m - 2.0) / sxx).sqrt()
    });
    Some(LogLogFit {
        slope,
        intercept,
        slope_std_err,
    })
}

/// Error of the fit against the embedded clean signal, for every `n` and
/// replicate, with a log-log slope per metric.
pub fn run_rate(cfg: &RateExperimentConfig) -> Result<RateExperimentResult> {
    cfg.validate(2)?;
    let per_rep = sweep(cfg, |i, clean, r, seed| {
        let rep = run_replicate(cfg, clean, seed)?;
        let checked = spot_check(&rep, r, cfg.check_every)
            .map_err(|message| PottsError::Replicate { seed, message })?;
        let fit_sf = rep.fit.to_step_function();
        let truth = rep.clean.embed();
        let rows: Vec<RawRow> = cfg
            .metrics
            .iter()
            .map(|&metric| RawRow {
                n: cfg.n_grid[i],
                replicate: r,
                seed,
                metric,
                value: metric_value(metric, &fit_sf, &truth),
                jumps: rep.fit.num_jumps(),
                gamma: rep.gamma,
            })
            .collect();
        Ok((rows, checked))
    })?;

    let checks_passed = per_rep.iter().filter(|(_, c)| *c).count();
    let raw: Vec<RawRow> = per_rep.into_iter().flat_map(|(rows, _)| rows).collect();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        for &metric in &cfg.metrics {
            let vals: Vec<f64> = raw
                .iter()
                .filter(|r| r.n == n && r.metric == metric)
                .map(|r| r.value)
                .collect();
            let (mean, std_err) = mean_and_se(&vals);
            summaries.push(RateSummary {
                n,
                metric,
                mean,
                std_err,
            });
        }
    }
    let slopes = cfg
        .metrics
        .iter()
        .map(|&metric| {
            let pts: Vec<(usize, f64)> = summaries
                .iter()
                .filter(|s| s.metric == metric)
                .map(|s| (s.n, s.mean))
                .collect();
            MetricSlope {
                metric,
                fit: log_log_fit(&pts),
            }
        })
        .collect();
    Ok(RateExperimentResult {
        summaries,
        slopes,
        raw,
        checks_passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub n: usize,
    pub replicates: usize,
    /// Fraction of replicates with exactly the true number of jumps.
    pub match_fraction: f64,
    /// Mean Hausdorff distance of the jump sets among matching replicates.
    pub mean_rho_h: Option<f64>,
    /// `n` times `mean_rho_h`.
    pub mean_n_rho_h: Option<f64>,
    pub mean_jumps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub true_jumps: usize,
    pub rows: Vec<RecoveryRow>,
    pub checks_passed: usize,
}

/// Jump-count and jump-location recovery for a piecewise-constant truth.
pub fn run_recovery(cfg: &RateExperimentConfig) -> Result<RecoveryResult> {
    cfg.validate(1)?;
    let Some(truth) = cfg.signal.step_function() else {
        return Err(PottsError::invalid(format!(
            "jump recovery needs a step truth, got {}",
            cfg.signal.name()
        )));
    };
    let true_jumps = truth?.num_jumps();
    let per_rep = sweep(cfg, |_, clean, r, seed| {
        let rep = run_replicate(cfg, clean, seed)?;
        let checked = spot_check(&rep, r, cfg.check_every)
            .map_err(|message| PottsError::Replicate { seed, message })?;
        let fit = rep.fit.to_step_function();
        let rho = hausdorff(&JumpSet::from(&fit), &JumpSet::from(&rep.clean.embed()));
        Ok((rep.fit.num_jumps(), rho, checked))
    })?;
    let checks_passed = per_rep.iter().filter(|(_, _, c)| *c).count();
    let rows = cfg
        .n_grid
        .iter()
        .zip(per_rep.chunks(cfg.replicates))
        .map(|(&n, chunk)| {
            let matched: Vec<f64> = chunk
                .iter()
                .filter(|(k, _, _)| *k == true_jumps)
                .map(|(_, rho, _)| *rho)
                .collect();
            let mean_rho_h =
                (!matched.is_empty()).then(|| matched.iter().sum::<f64>() / matched.len() as f64);
            RecoveryRow {
                n,
                replicates: chunk.len(),
                match_fraction: matched.len() as f64 / chunk.len() as f64,
                mean_rho_h,
                mean_n_rho_h: mean_rho_h.map(|m| m * n as f64),
                mean_jumps: chunk.iter().map(|(k, _, _)| *k as f64).sum::<f64>()
                    / chunk.len() as f64,
            }
        })
        .collect();
    Ok(RecoveryResult {
        true_jumps,
        rows,
        checks_passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementRow {
    pub n: usize,
    pub replicates: usize,
    /// Fraction of replicates where both rules give the same jump set.
    pub agreement: f64,
    pub mean_jumps_log: f64,
    pub mean_jumps_mr: f64,
}

/// Compares multiresolution selection with slack `delta` against the
/// logarithmic rule with constant `c` on identical noisy samples. The
/// `penalty` field of `cfg` is ignored.
pub fn run_agreement(cfg: &RateExperimentConfig, c: f64, delta: f64) -> Result<Vec<AgreementRow>> {
    cfg.validate(1)?;
    let log_rule = PenaltyRule::LogRule { c };
    let mr = PenaltyRule::Mr { delta };
    for rule in [log_rule, mr] {
        RateExperimentConfig {
            penalty: rule,
            ..cfg.clone()
        }
        .validate(1)?;
    }
    let per_rep = sweep(cfg, |_, clean, _, seed| {
        let y = noisy_sample(clean, cfg.noise_level, cfg.noise_family, seed)?;
        let (a, _) = fit_by_rule(&y, log_rule, cfg.sigma_method)?;
        let (b, _) = fit_by_rule(&y, mr, cfg.sigma_method)?;
        Ok((a.jumps() == b.jumps(), a.num_jumps(), b.num_jumps()))
    })?;
    Ok(cfg
        .n_grid
        .iter()
        .zip(per_rep.chunks(cfg.replicates))
        .map(|(&n, chunk)| {
            let m = chunk.len() as f64;
            AgreementRow {
                n,
                replicates: chunk.len(),
                agreement: chunk.iter().filter(|t| t.0).count() as f64 / m,
                mean_jumps_log: chunk.iter().map(|t| t.1 as f64).sum::<f64>() / m,
                mean_jumps_mr: chunk.iter().map(|t| t.2 as f64).sum::<f64>() / m,
            }
        })
        .collect())
}

/// Sample size of every reconstruction in the figure bundle.
pub const FIGURE1_N: usize = 2048;
pub const FIGURE1_SNRS: [f64; 3] = [7.0, 4.0, 1.0];

pub fn figure1_signals() -> [SignalFamily; 4] {
    [
        SignalFamily::Blocks,
        SignalFamily::Bumps,
        SignalFamily::HeaviSine,
        SignalFamily::Doppler,
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureCell {
    pub signal: String,
    pub snr: f64,
    pub sigma: f64,
    pub seed: u64,
    pub gamma: f64,
    #[serde(skip)]
    pub clean: SampledSignal,
    #[serde(skip)]
    pub noisy: SampledSignal,
    #[serde(skip)]
    pub fit: Segmentation,
    pub jumps: usize,
}

impl FigureCell {
    /// Columns `x, clean, noisy, fit` with `x = i / n`.
    pub fn to_csv(&self) -> String {
        let n = self.clean.len();
        let fitted = self.fit.fitted_values();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                vec![
                    ((i + 1) as f64 / n as f64).to_string(),
                    self.clean.values()[i].to_string(),
                    self.noisy.values()[i].to_string(),
                    fitted[i].to_string(),
                ]
            })
            .collect();
        crate::io::table_to_csv(&["x", "clean", "noisy", "fit"], &rows)
    }

    /// File stem such as `blocks_snr7`.
    pub fn stem(&self) -> String {
        format!("{}_snr{}", self.signal, self.snr)
    }
}

/// The four classical test signals at `n = 2048` and signal-to-noise ratios
/// 7, 4 and 1, each reconstructed with the log rule (`C = 2.5`, MAD noise
/// estimate). Cell `c` (row-major over signals, then ratios) draws its noise
/// with seed `seed ^ (c << 32)`.
pub fn run_figure1(seed: u64) -> Result<Vec<FigureCell>> {
    let cells: Vec<(usize, SignalFamily, f64)> = figure1_signals()
        .into_iter()
        .flat_map(|s| FIGURE1_SNRS.into_iter().map(move |snr| (s.clone(), snr)))
        .enumerate()
        .map(|(c, (s, snr))| (c, s, snr))
        .collect();
    cells
        .into_par_iter()
        .map(|(c, family, snr)| {
            let cell_seed = replicate_seed(seed, c, 0);
            let clean = generate(&SignalSpec::new(family.clone(), FIGURE1_N))?;
            let sigma = sigma_for_snr(&clean, snr)?;
            let noisy = add_noise(
                &clean,
                &NoiseSpec::new(NoiseFamily::Gaussian, sigma, cell_seed)?,
            );
            let sigma_hat = estimate_sigma(&noisy, SigmaMethod::MadDiff)?;
            let gamma = log_penalty(FIGURE1_N, sigma_hat, 2.5)?;
            let fit = penalized_fit(&noisy, gamma)?;
            Ok(FigureCell {
                signal: family.name().to_string(),
                snr,
                sigma,
                seed: cell_seed,
                gamma,
                jumps: fit.num_jumps(),
                clean,
                noisy,
                fit,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CnRow {
    pub n: usize,
    pub replicates: usize,
    pub median: f64,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Empirical distribution of `C_n` for pure noise.
pub fn run_cn(
    n_grid: &[usize],
    family: NoiseFamily,
    sigma: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<CnRow>> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2) {
        return Err(PottsError::invalid("every n must be at least 2"));
    }
    if replicates == 0 {
        return Err(PottsError::invalid("replicates must be at least 1"));
    }
    let spec = NoiseSpec::new(family, sigma, seed)?;
    let jobs: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let values: Vec<f64> = jobs
        .into_par_iter()
        .map(|(i, r)| {
            let s = replicate_seed(seed, i, r);
            let xi = SampledSignal::new(noise(n_grid[i], &spec.with_seed(s)))?;
            Ok(cn_statistic(&xi)?.cn)
        })
        .collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .zip(values.chunks(replicates))
        .map(|(&n, chunk)| {
            let mut sorted = chunk.to_vec();
            sorted.sort_by(f64::total_cmp);
            CnRow {
                n,
                replicates,
                median: quantile(&sorted, 0.5),
                mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
                q10: quantile(&sorted, 0.1),
                q90: quantile(&sorted, 0.9),
                max: *sorted.last().unwrap(),
                values: chunk.to_vec(),
            }
        })
        .collect())
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_cfg(n_grid: Vec<usize>, replicates: usize) -> RateExperimentConfig {
        RateExperimentConfig::new(SignalFamily::three_jump_step(), n_grid, replicates, 7.0)
    }

    #[test]
    fn seeds_are_distinct_across_grid() {
        assert_ne!(replicate_seed(5, 0, 1), replicate_seed(5, 1, 0));
        assert_eq!(replicate_seed(5, 0, 0), 5);
    }

    #[test]
    fn noiseless_rate_is_exact() {
        let mut cfg = step_cfg(vec![64, 128, 256], 1);
        cfg.noise_level = NoiseLevel::Sigma(0.0);
        cfg.metrics = vec![Metric::L2, Metric::JumpCount];
        let res = run_rate(&cfg).unwrap();
        assert!(res.means(Metric::L2).iter().all(|&(_, m)| m == 0.0));
        assert!(res.slope(Metric::L2).is_none());
        assert!(res.means(Metric::JumpCount).iter().all(|&(_, m)| m == 3.0));
        assert_eq!(res.raw.len(), 6);
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let mut cfg = step_cfg(vec![256], 2);
        cfg.noise_level = NoiseLevel::Sigma(0.0);
        let res = run_recovery(&cfg).unwrap();
        assert_eq!(res.rows[0].match_fraction, 1.0);
        assert!(res.rows[0].mean_rho_h.unwrap() <= 1.0 / 256.0);
    }

    #[test]
    fn recovery_rejects_smooth_truth() {
        let cfg = RateExperimentConfig::new(SignalFamily::LipschitzRamp, vec![64], 1, 7.0);
        assert!(run_recovery(&cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(run_rate(&step_cfg(vec![64], 1)).is_err());
        assert!(run_rate(&step_cfg(vec![128, 64], 1)).is_err());
        assert!(run_rate(&step_cfg(vec![64, 128], 0)).is_err());
        let mut cfg = step_cfg(vec![64, 128], 1);
        cfg.penalty = PenaltyRule::Fixed { gamma: 0.0 };
        assert!(run_rate(&cfg).is_err());
    }

    #[test]
    fn rate_is_deterministic_and_checked() {
        let mut cfg = step_cfg(vec![64, 128], 4);
        cfg.base_seed = 11;
        cfg.check_every = 1;
        cfg.metrics = vec![Metric::L2, Metric::Hausdorff, Metric::Skorokhod];
        let a = run_rate(&cfg).unwrap();
        let b = run_rate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.raw_csv(), b.raw_csv());
        assert_eq!(a.raw.len(), 2 * 4 * 3);
        assert_eq!(a.checks_passed, 8);
    }

    #[test]
    fn mr_rule_runs() {
        let mut cfg = step_cfg(vec![128, 256], 2);
        cfg.penalty = PenaltyRule::Mr { delta: 0.05 };
        let res = run_rate(&cfg).unwrap();
        assert!(res.means(Metric::L2).iter().all(|&(_, m)| m.is_finite()));
        let rows = run_agreement(&cfg, 2.5, 0.05).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn log_log_fit_recovers_power_law() {
        let pts: Vec<(usize, f64)> = [10, 100, 1000]
            .iter()
            .map(|&n| (n, 3.0 * (n as f64).powf(-0.5)))
            .collect();
        let f = log_log_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(log_log_fit(&[(10, 0.0), (20, 1.0)]).is_none());
    }

    #[test]
    fn cn_scales_with_sigma_squared() {
        let a = run_cn(&[200], NoiseFamily::Gaussian, 1.0, 3, 4).unwrap();
        let b = run_cn(&[200], NoiseFamily::Gaussian, 2.0, 3, 4).unwrap();
        for (x, y) in a[0].values.iter().zip(&b[0].values) {
            assert!((4.0 * x - y).abs() < 1e-9 * y);
        }
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }
}
