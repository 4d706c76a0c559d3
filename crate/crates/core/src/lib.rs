// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

//! Exact minimization of the jump-penalized least-squares (Potts) functional
//!
//! ```text
//! H_gamma(u, y) = (1/n) * sum_i (u_i - y_i)^2 + gamma * #{i : u_i != u_{i+1}}
//! ```
//!
//! for one-dimensional signals on the equidistant grid `x_i = i/n`, together
//! with automatic penalty selection and the tooling needed to check the
//! estimator's consistency and convergence rates empirically.
//!
//! Module map:
//!
//! * [`stepfn`]: sampled signals, right-continuous step functions on `[0, 1)`
//!   and their algebra (embedding, projections, L2 distance, best k-jump
//!   approximation error).
//! * [`potts`]: exact dynamic programs for a single penalty, a jump budget and
//!   the whole solution path, plus an exhaustive oracle and the a-priori
//!   minimizer inequalities.
//! * [`selection`]: noise-level estimation, the logarithmic penalty rule, the
//!   multiresolution residual criterion and the maximal normalized partial
//!   sum statistic of the noise.
//! * [`metrics`]: Hausdorff distance between jump sets, Skorokhod J1 and
//!   uniform distances between step functions.
//! * [`signals`]: Donoho-Johnstone test signals, Hoelder and bounded-variation
//!   examples, and sub-Gaussian noise.
//! * [`experiments`]: reproducible Monte Carlo harness for rates, recovery,
//!   penalty selection agreement and noise statistics.
//! * [`io`]: CSV/JSON formats shared with the command-line front end.

pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod potts;
pub mod selection;
pub mod signals;
pub mod stepfn;

pub use error::{PottsError, Result};
pub use metrics::{hausdorff, skorokhod, sup_distance, JumpSet, SkorokhodResult};
pub use potts::{
    brute_force_fit, fit_gamma, fit_k, solve_path, HullVertex, PrefixMoments, Segmentation,
    SolutionPath,
};
pub use selection::{
    cn_statistic, estimate_sigma, log_penalty, mr_check, mr_select, CnReport, IntervalFamily,
    MrCheck, MrSelection, SelectionConfig, SigmaMethod,
};
pub use signals::{
    add_noise, generate, sigma_for_snr, NoiseFamily, NoiseSpec, SignalFamily, SignalSpec,
};
pub use stepfn::{
    delta_k, embed, jump_set, l2_distance, mpl, project, Interval, IntervalMean, SampledSignal,
    StepFunction,
};
