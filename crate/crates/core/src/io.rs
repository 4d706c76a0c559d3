// SPDX-License-Identifier: MIT OR Apache-2.0

//! Text formats: signals as CSV, fits and step functions as JSON.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical to the value written.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::metrics::JumpSet;
use crate::potts::Segmentation;
use crate::stepfn::{SampledSignal, StepFunction};

/// Relative tolerance on the spacing of an `x,y` signal.
const SPACING_RTOL: f64 = 1e-6;

fn parse_err(line: usize, message: impl Into<String>) -> PottsError {
    PottsError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a signal from CSV: either one value per line, or `x,y` pairs on an
/// equidistant, increasing `x` grid (the `x` column is then discarded). A
/// first line that does not parse as numbers is taken as a header; blank
/// lines and lines starting with `#` are skipped.
pub fn parse_signal_csv(text: &str) -> Result<SampledSignal> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match fields {
            Ok(v) => {
                seen_data = true;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(parse_err(line_no, format!("non-finite value in {line:?}")));
                }
                rows.push((line_no, v));
            }
            Err(_) if !seen_data && rows.is_empty() => {
                seen_data = true;
            }
            Err(e) => return Err(parse_err(line_no, format!("{e} in {line:?}"))),
        }
    }
    let Some((first_line, first)) = rows.first() else {
        return Err(parse_err(1, "no data rows"));
    };
    let width = first.len();
    if !(1..=2).contains(&width) {
        return Err(parse_err(
            *first_line,
            format!("expected 1 or 2 columns, found {width}"),
        ));
    }
    if let Some((line, row)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(parse_err(
            *line,
            format!("expected {width} columns, found {}", row.len()),
        ));
    }
    if width == 2 && rows.len() >= 2 {
        let step = rows[1].1[0] - rows[0].1[0];
        if step <= 0.0 {
            return Err(parse_err(rows[1].0, "x values must be increasing"));
        }
        for w in rows.windows(2) {
            let d = w[1].1[0] - w[0].1[0];
            if (d - step).abs() > SPACING_RTOL * step {
                return Err(parse_err(
                    w[1].0,
                    format!("x grid is not equidistant: spacing {d} vs {step}"),
                ));
            }
        }
    }
    SampledSignal::new(rows.into_iter().map(|(_, r)| r[width - 1]).collect())
}

/// One value per line.
pub fn values_to_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Header line plus rows of already formatted cells.
pub fn table_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// JSON layout of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    /// Penalty used; absent when the fit was not produced by a penalty.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    pub jumps: Vec<usize>,
    pub levels: Vec<f64>,
    pub rss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h_value: Option<f64>,
}

impl FitReport {
    pub fn new(fit: &Segmentation, gamma: Option<f64>) -> Self {
        // A non-finite penalty (the constant fit from MR selection) has no
        // finite functional value and is not representable in JSON.
        let gamma = gamma.filter(|g| g.is_finite());
        Self {
            n: fit.n(),
            gamma,
            jumps: fit.jumps().to_vec(),
            levels: fit.levels().to_vec(),
            rss: fit.rss(),
            h_value: gamma.map(|g| fit.h_value(g)),
        }
    }

    /// The fit as a step function on `[0, 1)`.
    pub fn to_step_function(&self) -> Result<StepFunction> {
        let nf = self.n as f64;
        StepFunction::new(
            self.jumps.iter().map(|&j| j as f64 / nf).collect(),
            self.levels.clone(),
        )
    }
}

/// Anything the metrics can be evaluated on.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricInput {
    Jumps(JumpSet),
    Step(StepFunction),
}

impl MetricInput {
    pub fn jump_set(&self) -> JumpSet {
        match self {
            MetricInput::Jumps(j) => j.clone(),
            MetricInput::Step(f) => JumpSet::from(f),
        }
    }

    pub fn step_function(&self) -> Result<&StepFunction> {
        match self {
            MetricInput::Step(f) => Ok(f),
            MetricInput::Jumps(_) => Err(PottsError::invalid(
                "a bare jump set has no levels; this metric needs a step function",
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MetricJson {
    Step(StepFunction),
    Fit(FitReport),
    Jumps(Vec<f64>),
}

/// Reads a metric operand. JSON may be a step function
/// `{"breakpoints": [...], "levels": [...]}`, a fit report, or a bare array
/// of jump positions in `(0, 1)`; anything else is parsed as a CSV signal and
/// embedded.
pub fn parse_metric_input(text: &str) -> Result<MetricInput> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        let parsed: MetricJson = serde_json::from_str(text).map_err(|e| {
            parse_err(
                e.line(),
                format!("expected a step function, fit or jump array: {e}"),
            )
        })?;
        return match parsed {
            MetricJson::Step(f) => Ok(MetricInput::Step(f)),
            MetricJson::Fit(r) => Ok(MetricInput::Step(r.to_step_function()?)),
            MetricJson::Jumps(j) => Ok(MetricInput::Jumps(JumpSet::new(j)?)),
        };
    }
    Ok(MetricInput::Step(parse_signal_csv(text)?.embed()))
}
