// SPDX-License-Identifier: Apache-2.0

//! From time tags to physical estimates: histograms, background subtraction,
//! branching fraction and detection efficiency, exponential-tail fits,
//! saturation parameters, and Poisson goodness-of-fit.

mod background;
mod estimators;
mod fit;
mod gof;
mod histogram;
mod report;

pub use background::{estimate_constant_rate, subtract_background, CorrectedSeries, Reference};
pub use estimators::{estimate_branching, estimate_efficiency, s_from_tau, s_from_tau_with_sigma, Estimate, SaturationEstimate};
pub use fit::{default_fit_window, fit_exponential_tail, tail_model, FitResult};
pub use gof::{poisson_gof, PoissonGof};
pub use histogram::{bin_timestamps, bin_times, Histogram};
pub use report::{CurveReport, ExperimentReport, RunMetadata};
