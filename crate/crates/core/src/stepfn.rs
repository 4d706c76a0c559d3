// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sampled signals and right-continuous step functions on `[0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::potts::{self, Segmentation};

/// Relative slack when deciding whether a real position sits on the sample grid.
const GRID_TOL: f64 = 1e-9;

/// `n` samples on the equidistant grid `x_i = i/n`, `i = 1..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SampledSignal {
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PottsError::invalid(
                "a sampled signal needs at least one value",
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PottsError::invalid(format!(
                "sample {} is not finite: {}",
                i + 1,
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn embed(&self) -> StepFunction {
        StepFunction::from_cells(&self.values)
    }

    /// Squared L2 norm of the embedding, `(1/n) * sum y_i^2`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    /// Elementwise map, for shifts and rescalings in tests and generators.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

impl TryFrom<Vec<f64>> for SampledSignal {
    type Error = PottsError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<SampledSignal> for Vec<f64> {
    fn from(signal: SampledSignal) -> Self {
        signal.values
    }
}

/// Half-open interval `[left, right)` inside `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    left: f64,
    right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&left) || !(right > 0.0 && right <= 1.0) {
            return Err(PottsError::invalid(format!(
                "interval [{left}, {right}) is not inside [0, 1]"
            )));
        }
        if left >= right {
            return Err(PottsError::invalid(format!(
                "interval [{left}, {right}) has zero or negative length"
            )));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }
}

/// Right-continuous step function on `[0, 1)` in canonical form: strictly
/// increasing interior breakpoints and no zero-height jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepFunction")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<RawStepFunction> for StepFunction {
    type Error = PottsError;

    fn try_from(raw: RawStepFunction) -> Result<Self> {
        Self::new(raw.breakpoints, raw.levels)
    }
}

impl StepFunction {
    /// Validates the layout and merges adjacent pieces whose levels compare
    /// exactly equal.
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(PottsError::invalid(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        if let Some(v) = levels.iter().find(|v| !v.is_finite()) {
            return Err(PottsError::invalid(format!("level {v} is not finite")));
        }
        if let Some(t) = breakpoints.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(PottsError::invalid(format!(
                "breakpoint {t} is not inside (0, 1)"
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PottsError::invalid(
                "breakpoints must be strictly increasing",
            ));
        }
        Ok(Self::canonical(breakpoints, levels))
    }

    pub fn constant(level: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            levels: vec![level],
        }
    }

    fn canonical(breakpoints: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut lvls = Vec::with_capacity(levels.len());
        lvls.push(levels[0]);
        for (t, &v) in breakpoints.into_iter().zip(&levels[1..]) {
            if v != *lvls.last().unwrap() {
                bps.push(t);
                lvls.push(v);
            }
        }
        Self {
            breakpoints: bps,
            levels: lvls,
        }
    }

    /// `sum_i u_i 1_[(i-1)/n, i/n)`; `u` must be non-empty.
    pub(crate) fn from_cells(u: &[f64]) -> Self {
        let n = u.len() as f64;
        let breakpoints = (1..u.len()).map(|i| i as f64 / n).collect();
        Self::canonical(breakpoints, u.to_vec())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn num_jumps(&self) -> usize {
        self.breakpoints.len()
    }

    /// Value at `t`; right-continuous, with `f(1) = f(1-)`.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.levels[idx]
    }

    /// Pieces as `(left, right, level)` triples covering `[0, 1)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.levels.len()).map(move |i| {
            let left = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
            let right = self.breakpoints.get(i).copied().unwrap_or(1.0);
            (left, right, self.levels[i])
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.pieces().map(|(a, b, v)| (b - a) * v * v).sum()
    }
}

/// Breakpoints of the union partition of `f` and `g`, as `(left, right, f, g)`
/// pieces of positive length.
pub(crate) fn merged_pieces(f: &StepFunction, g: &StepFunction) -> Vec<(f64, f64, f64, f64)> {
    let (fb, gb) = (f.breakpoints(), g.breakpoints());
    let mut out = Vec::with_capacity(fb.len() + gb.len() + 1);
    let (mut i, mut j) = (0, 0);
    let mut left = 0.0;
    loop {
        let nf = fb.get(i).copied().unwrap_or(1.0);
        let ng = gb.get(j).copied().unwrap_or(1.0);
        let right = nf.min(ng);
        if right > left {
            out.push((left, right, f.levels()[i], g.levels()[j]));
        }
        if right >= 1.0 {
            break;
        }
        if nf == right {
            i += 1;
        }
        if ng == right {
            j += 1;
        }
        left = right;
    }
    out
}

/// Piecewise-constant embedding of a sample vector into `[0, 1)`.
pub fn embed(u: &[f64]) -> Result<StepFunction> {
    Ok(SampledSignal::new(u.to_vec())?.embed())
}

/// Mean value over an interval, `l(I)^{-1} * integral_I f`.
pub trait IntervalMean {
    fn mean_on(&self, interval: &Interval) -> Result<f64>;
}

impl IntervalMean for StepFunction {
    fn mean_on(&self, interval: &Interval) -> Result<f64> {
        let (a, b) = (interval.left(), interval.right());
        let integral: f64 = self
            .pieces()
            .map(|(l, r, v)| (r.min(b) - l.max(a)).max(0.0) * v)
            .sum();
        Ok(integral / interval.length())
    }
}

impl IntervalMean for SampledSignal {
    fn mean_on(&self, interval: &Interval) -> Result<f64> {
        let n = self.len();
        let start = grid_index(interval.left(), n)?;
        let end = grid_index(interval.right(), n)?;
        let cell = &self.values[start..end];
        Ok(cell.iter().sum::<f64>() / cell.len() as f64)
    }
}

pub fn mean_on_interval<F: IntervalMean + ?Sized>(f: &F, interval: &Interval) -> Result<f64> {
    f.mean_on(interval)
}

/// Index `k` with `k/n == t`, or an error when `t` is off the grid.
pub(crate) fn grid_index(t: f64, n: usize) -> Result<usize> {
    let scaled = t * n as f64;
    let k = scaled.round();
    if (scaled - k).abs() > GRID_TOL * n.max(1) as f64 || k < 0.0 || k > n as f64 {
        return Err(PottsError::invalid(format!(
            "position {t} is not a multiple of 1/{n}"
        )));
    }
    Ok(k as usize)
}

/// L2 projection of the embedded samples onto step functions whose jumps lie
/// in `breakpoints`: the level on each cell is the cell mean.
pub fn project(f: &SampledSignal, breakpoints: &[f64]) -> Result<StepFunction> {
    let n = f.len();
    let mut cuts = Vec::with_capacity(breakpoints.len());
    for &t in breakpoints {
        if !(t > 0.0 && t < 1.0) {
            return Err(PottsError::invalid(format!(
                "breakpoint {t} is not inside (0, 1)"
            )));
        }
        cuts.push(grid_index(t, n)?);
    }
    cuts.sort_unstable();
    cuts.dedup();
    let seg = Segmentation::from_jumps(f.values(), cuts)?;
    Ok(seg.to_step_function())
}

/// `sqrt(integral_0^1 (f - g)^2)`, exact over the merged partition.
pub fn l2_distance(f: &StepFunction, g: &StepFunction) -> f64 {
    merged_pieces(f, g)
        .into_iter()
        .map(|(a, b, u, v)| (b - a) * (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Positions where `f` changes value.
pub fn jump_set(f: &StepFunction) -> Vec<f64> {
    f.breakpoints().to_vec()
}

/// Minimal plateau length: the smallest gap among `J(f) U {0, 1}`.
pub fn mpl(f: &StepFunction) -> f64 {
    let mut prev = 0.0;
    let mut best = f64::INFINITY;
    for &t in f.breakpoints().iter().chain(std::iter::once(&1.0)) {
        best = best.min(t - prev);
        prev = t;
    }
    best
}

/// Best approximation error of the embedded samples by grid-aligned step
/// functions with at most `k` jumps, together with the minimizer.
pub fn delta_k(f: &SampledSignal, k: usize) -> Result<(f64, Segmentation)> {
    let seg = potts::fit_k(f, k)?;
    let err = (seg.rss() / f.len() as f64).sqrt();
    Ok((err, seg))
}
