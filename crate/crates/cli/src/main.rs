// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

mod args;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use args::{
    BenchArgs, Cli, CnArgs, Command, Family, FigureArgs, FitArgs, Format, MetricName, MetricsArgs,
    MrFamily, Noise, NoiseArgs, PathArgs, Penalty, Rule, SelectArgs, SignalArgs, Truth,
};
use potts_core::experiments::{
    run_cn, run_figure1, run_rate, run_recovery, Metric, NoiseLevel, PenaltyRule,
    RateExperimentConfig,
};
use potts_core::io::{
    parse_metric_input, parse_signal_csv, table_to_csv, values_to_csv, FitReport,
};
use potts_core::{
    add_noise, estimate_sigma, fit_gamma, generate, hausdorff, log_penalty, mr_select, skorokhod,
    solve_path, stepfn::l2_distance, sup_distance, IntervalFamily, NoiseFamily, NoiseSpec,
    PottsError, SampledSignal, SelectionConfig, SigmaMethod, SignalFamily, SignalSpec,
};

/// Failures, split by exit code.
enum Failure {
    /// Bad flags or flag combinations (exit code 2).
    Usage(String),
    /// Unreadable, malformed or unusable data (exit code 3).
    Data(String),
}

impl From<PottsError> for Failure {
    fn from(e: PottsError) -> Self {
        match e {
            PottsError::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Data(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Path(a) => cmd_path(a),
        Command::Select(a) => cmd_select(a),
        Command::Signal(a) => cmd_signal(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::BenchRates(a) => cmd_bench_rates(a),
        Command::BenchRecovery(a) => cmd_bench_recovery(a),
        Command::BenchCn(a) => cmd_bench_cn(a),
        Command::Figure1(a) => cmd_figure1(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_signal(path: &Path) -> CliResult<SampledSignal> {
    let text = read_text(path)?;
    parse_signal_csv(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Destination opened before any work starts, so an unwritable path fails
/// fast.
struct Sink(Option<(fs::File, String)>);

impl Sink {
    fn open(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Sink(None)),
            Some(p) => fs::File::create(p)
                .map(|f| Sink(Some((f, p.display().to_string()))))
                .map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        }
    }

    fn write(self, text: &str) -> CliResult<()> {
        match self.0 {
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Data(format!("stdout: {e}"))),
            Some((mut f, name)) => f
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Data(format!("{name}: {e}"))),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn sigma_method(spec: &str) -> CliResult<SigmaMethod> {
    match spec {
        "mad" => Ok(SigmaMethod::MadDiff),
        "msd" => Ok(SigmaMethod::MeanSqDiff),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|s| *s >= 0.0 && s.is_finite())
            .map(SigmaMethod::Fixed)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "--sigma expects mad, msd or a non-negative number, got {other:?}"
                ))
            }),
    }
}

fn selection_config(p: &Penalty) -> CliResult<SelectionConfig> {
    let cfg = SelectionConfig {
        c_const: p.c_const,
        delta: p.delta,
        interval_family: match p.mr_family {
            MrFamily::All => IntervalFamily::All,
            MrFamily::Dyadic => IntervalFamily::Dyadic,
        },
        sigma_method: sigma_method(&p.sigma_method)?,
        k_max: None,
    };
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Selected {
    rule: &'static str,
    /// Absent when the selected penalty is unbounded (constant fit).
    gamma: Option<f64>,
    sigma_hat: Option<f64>,
    threshold: Option<f64>,
    saturated: bool,
    fit: FitReport,
}

fn select(y: &SampledSignal, p: &Penalty) -> CliResult<Selected> {
    let cfg = selection_config(p)?;
    if let Some(gamma) = p.gamma {
        let fit = fit_gamma(y, gamma)?;
        return Ok(Selected {
            rule: "fixed",
            gamma: Some(gamma),
            sigma_hat: None,
            threshold: None,
            saturated: false,
            fit: FitReport::new(&fit, Some(gamma)),
        });
    }
    if y.len() < 2 {
        return Err(Failure::Data(
            "penalty selection needs at least two samples".into(),
        ));
    }
    match p.select {
        Rule::Log => {
            let sigma_hat = estimate_sigma(y, cfg.sigma_method)?;
            let gamma = log_penalty(y.len(), sigma_hat, cfg.c_const)?;
            let fit = if gamma > 0.0 {
                fit_gamma(y, gamma)?
            } else {
                // Zero noise estimate: the least-jump exact fit.
                let v = y.values();
                let jumps = (1..v.len()).filter(|&j| v[j - 1] != v[j]).collect();
                potts_core::Segmentation::from_jumps(v, jumps)?
            };
            Ok(Selected {
                rule: "log",
                gamma: Some(gamma),
                sigma_hat: Some(sigma_hat),
                threshold: None,
                saturated: false,
                fit: FitReport::new(&fit, Some(gamma).filter(|g| *g > 0.0)),
            })
        }
        Rule::Mr => {
            let sel = mr_select(y, &cfg)?;
            let gamma = Some(sel.gamma_hat).filter(|g| g.is_finite());
            Ok(Selected {
                rule: "mr",
                gamma,
                sigma_hat: Some(sel.sigma_hat),
                threshold: Some(sel.threshold),
                saturated: sel.saturated,
                fit: FitReport::new(&sel.fit, gamma.filter(|_| !sel.saturated)),
            })
        }
    }
}

fn fitted_csv(report: &FitReport) -> String {
    let mut values = Vec::with_capacity(report.n);
    let mut start = 0;
    for (i, &level) in report.levels.iter().enumerate() {
        let end = report.jumps.get(i).copied().unwrap_or(report.n);
        values.extend(std::iter::repeat_n(level, end - start));
        start = end;
    }
    values_to_csv(&values)
}

fn cmd_fit(a: FitArgs) -> CliResult<()> {
    let sink = Sink::open(a.output.out.as_deref())?;
    let fitted_sink = Sink::open(a.fitted.as_deref())?;
    let y = read_signal(&a.input)?;
    let sel = select(&y, &a.penalty)?;
    if a.fitted.is_some() {
        fitted_sink.write(&fitted_csv(&sel.fit))?;
    }
    match a.format {
        Format::Json => sink.write(&json(&sel.fit)),
        Format::Csv => sink.write(&fitted_csv(&sel.fit)),
    }
}

fn cmd_select(a: SelectArgs) -> CliResult<()> {
    let sink = Sink::open(a.output.out.as_deref())?;
    let y = read_signal(&a.input)?;
    let sel = select(&y, &a.penalty)?;
    match a.format {
        Format::Json => sink.write(&json(&sel)),
        Format::Csv => {
            let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let row = vec![
                sel.rule.to_string(),
                cell(sel.gamma),
                cell(sel.sigma_hat),
                cell(sel.threshold),
                sel.saturated.to_string(),
                sel.fit.jumps.len().to_string(),
            ];
            sink.write(&table_to_csv(
                &[
                    "rule",
                    "gamma",
                    "sigma_hat",
                    "threshold",
                    "saturated",
                    "jumps",
                ],
                &[row],
            ))
        }
    }
}

fn cmd_path(a: PathArgs) -> CliResult<()> {
    if a.k_max == Some(0) {
        return Err(Failure::Usage("--k-max must be at least 1".into()));
    }
    let sink = Sink::open(a.output.out.as_deref())?;
    let y = read_signal(&a.input)?;
    let n = y.len();
    if n < 2 {
        // A single sample admits no jumps: the path is the constant fit.
        let fit = potts_core::Segmentation::from_jumps(y.values(), vec![])?;
        let report = serde_json::json!({
            "n": n, "ks": [0], "rss": [fit.rss()],
            "knots": [{"gamma": 0.0, "k": 0}], "complete": true
        });
        return match a.format {
            Format::Json => sink.write(&json(&report)),
            Format::Csv => sink.write("k,rss,on_hull,gamma_lo,gamma_hi\n0,0,true,0,inf\n"),
        };
    }
    let k_max = a.k_max.unwrap_or_else(|| (n - 1).min(n.div_ceil(2)));
    if k_max > n - 1 {
        return Err(Failure::Usage(format!(
            "--k-max {k_max} exceeds n - 1 = {}",
            n - 1
        )));
    }
    let path = solve_path(&y, k_max)?;
    match a.format {
        Format::Json => sink.write(&json(&path.report())),
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..=path.k_max())
                .map(|k| {
                    let v = path.hull().iter().find(|v| v.k == k);
                    vec![
                        k.to_string(),
                        path.rss(k).to_string(),
                        v.is_some().to_string(),
                        v.map(|v| v.gamma_lo.to_string()).unwrap_or_default(),
                        v.map(|v| v.gamma_hi.to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            sink.write(&table_to_csv(
                &["k", "rss", "on_hull", "gamma_lo", "gamma_hi"],
                &rows,
            ))
        }
    }
}

fn signal_family(t: &Truth) -> CliResult<SignalFamily> {
    if t.family != Family::Step && (t.jumps.is_some() || t.levels.is_some()) {
        return Err(Failure::Usage(
            "--jumps and --levels apply to the step family only".into(),
        ));
    }
    Ok(match t.family {
        Family::Blocks => SignalFamily::Blocks,
        Family::Bumps => SignalFamily::Bumps,
        Family::Heavisine => SignalFamily::HeaviSine,
        Family::Doppler => SignalFamily::Doppler,
        Family::Ramp => SignalFamily::LipschitzRamp,
        Family::Holder => SignalFamily::Holder { alpha: t.alpha },
        Family::Bv => SignalFamily::BvExample,
        Family::Step => match (&t.jumps, &t.levels) {
            (None, None) => SignalFamily::three_jump_step(),
            (Some(j), Some(l)) => SignalFamily::Step {
                jumps: j.clone(),
                levels: l.clone(),
            },
            _ => {
                return Err(Failure::Usage(
                    "--jumps and --levels must be given together".into(),
                ))
            }
        },
    })
}

fn noise_family(n: Noise) -> NoiseFamily {
    match n {
        Noise::Gaussian => NoiseFamily::Gaussian,
        Noise::Rademacher => NoiseFamily::Rademacher,
        Noise::Uniform => NoiseFamily::Uniform,
    }
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| Failure::Usage("this command draws random numbers and needs --seed".into()))
}

fn noise_level(a: &NoiseArgs) -> CliResult<NoiseLevel> {
    match (a.snr, a.sigma) {
        (Some(s), None) => Ok(NoiseLevel::Snr(s)),
        (None, Some(s)) => Ok(NoiseLevel::Sigma(s)),
        (None, None) => Err(Failure::Usage(
            "give the noise level with --snr or --sigma".into(),
        )),
        (Some(_), Some(_)) => Err(Failure::Usage("--snr and --sigma are exclusive".into())),
    }
}

fn cmd_signal(a: SignalArgs) -> CliResult<()> {
    let family = signal_family(&a.truth)?;
    let sink = Sink::open(a.output.out.as_deref())?;
    let clean = generate(&SignalSpec::new(family, a.n))?;
    let y = if a.clean {
        clean
    } else {
        let seed = require_seed(a.noise.seed)?;
        let sigma = match noise_level(&a.noise)? {
            NoiseLevel::Snr(s) => potts_core::sigma_for_snr(&clean, s)?,
            NoiseLevel::Sigma(s) => s,
        };
        add_noise(
            &clean,
            &NoiseSpec::new(noise_family(a.noise.noise), sigma, seed)?,
        )
    };
    match a.format {
        Format::Csv => sink.write(&values_to_csv(y.values())),
        Format::Json => sink.write(&json(&y)),
    }
}

fn cmd_metrics(a: MetricsArgs) -> CliResult<()> {
    let sink = Sink::open(a.output.out.as_deref())?;
    let load = |p: &Path| -> CliResult<_> {
        parse_metric_input(&read_text(p)?)
            .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))
    };
    let (fa, fb) = (load(&a.a)?, load(&a.b)?);
    let all = !(a.hausdorff || a.skorokhod || a.sup || a.l2);
    let mut out: Vec<(&str, f64)> = Vec::new();
    if a.hausdorff || all {
        out.push(("hausdorff", hausdorff(&fa.jump_set(), &fb.jump_set())));
    }
    let both_steps = fa.step_function().is_ok() && fb.step_function().is_ok();
    if a.skorokhod || a.sup || a.l2 || (all && both_steps) {
        let (f, g) = (fa.step_function()?, fb.step_function()?);
        if a.skorokhod || all {
            out.push(("skorokhod", skorokhod(f, g).distance));
        }
        if a.sup || all {
            out.push(("sup", sup_distance(f, g)));
        }
        if a.l2 || all {
            out.push(("l2", l2_distance(f, g)));
        }
    }
    match a.format {
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = out
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect();
            sink.write(&json(&map))
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = out
                .iter()
                .map(|(k, v)| vec![k.to_string(), v.to_string()])
                .collect();
            sink.write(&table_to_csv(&["metric", "value"], &rows))
        }
    }
}

fn bench_config(a: &BenchArgs) -> CliResult<RateExperimentConfig> {
    let signal = signal_family(&a.truth)?;
    let seed = require_seed(a.noise.seed)?;
    let penalty = match (a.gamma, a.select) {
        (Some(gamma), _) => PenaltyRule::Fixed { gamma },
        (None, Rule::Log) => PenaltyRule::LogRule { c: a.c_const },
        (None, Rule::Mr) => PenaltyRule::Mr { delta: a.delta },
    };
    Ok(RateExperimentConfig {
        signal,
        n_grid: a.ns.clone(),
        replicates: a.reps,
        noise_level: noise_level(&a.noise)?,
        noise_family: noise_family(a.noise.noise),
        penalty,
        sigma_method: sigma_method(&a.sigma_method)?,
        metrics: a
            .metric
            .iter()
            .map(|m| match m {
                MetricName::L2 => Metric::L2,
                MetricName::Hausdorff => Metric::Hausdorff,
                MetricName::Skorokhod => Metric::Skorokhod,
                MetricName::JumpCount => Metric::JumpCount,
            })
            .collect(),
        base_seed: seed,
        check_every: a.check_every,
    })
}

fn cmd_bench_rates(a: BenchArgs) -> CliResult<()> {
    let cfg = bench_config(&a)?;
    let sink = Sink::open(a.output.out.as_deref())?;
    let res = run_rate(&cfg)?;
    match a.format {
        Format::Csv => sink.write(&res.raw_csv()),
        Format::Json => sink.write(&json(&res)),
    }
}

fn cmd_bench_recovery(a: BenchArgs) -> CliResult<()> {
    let cfg = bench_config(&a)?;
    let sink = Sink::open(a.output.out.as_deref())?;
    let res = run_recovery(&cfg)?;
    match a.format {
        Format::Json => sink.write(&json(&res)),
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let rows: Vec<Vec<String>> = res
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.replicates.to_string(),
                        r.match_fraction.to_string(),
                        opt(r.mean_rho_h),
                        opt(r.mean_n_rho_h),
                        r.mean_jumps.to_string(),
                    ]
                })
                .collect();
            sink.write(&table_to_csv(
                &[
                    "n",
                    "replicates",
                    "match_fraction",
                    "mean_rho_h",
                    "mean_n_rho_h",
                    "mean_jumps",
                ],
                &rows,
            ))
        }
    }
}

fn cmd_bench_cn(a: CnArgs) -> CliResult<()> {
    let seed = require_seed(a.seed)?;
    let sink = Sink::open(a.output.out.as_deref())?;
    let rows = run_cn(&a.ns, noise_family(a.noise), a.sigma, a.reps, seed)?;
    match a.format {
        Format::Json => sink.write(&json(&rows)),
        Format::Csv => {
            let mut cells = Vec::new();
            for r in &rows {
                for (i, v) in r.values.iter().enumerate() {
                    cells.push(vec![r.n.to_string(), i.to_string(), v.to_string()]);
                }
            }
            sink.write(&table_to_csv(&["n", "replicate", "cn"], &cells))
        }
    }
}

fn cmd_figure1(a: FigureArgs) -> CliResult<()> {
    let seed = require_seed(a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::Data(format!("{}: {e}", a.out.display())))?;
    let cells = run_figure1(seed)?;
    for c in &cells {
        let path = a.out.join(format!("{}.csv", c.stem()));
        Sink::open(Some(&path))?.write(&c.to_csv())?;
    }
    let summary = json(&cells);
    Sink::open(Some(&a.out.join("summary.json")))?.write(&summary)?;
    std::io::stdout()
        .write_all(summary.as_bytes())
        .map_err(|e| Failure::Data(format!("stdout: {e}")))
}
