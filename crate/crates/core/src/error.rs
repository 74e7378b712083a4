// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A scalar argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator needed a step below its floor.
    #[error("step size underflow at t = {t} us (h = {step:e} us); system too stiff")]
    Stiffness { t: f64, step: f64 },

    /// The generator has more than one independent stationary state.
    #[error("steady state is not unique: kernel dimension {dimension}")]
    NonUniqueSteadyState { dimension: usize },

    /// Levenberg-Marquardt did not settle.
    #[error("fit did not converge after {iterations} iterations")]
    FitDidNotConverge { iterations: usize },

    /// Too few samples for a statistical test.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Two-level inversion requested in a regime where it has no solution.
    #[error("unphysical regime: excited population {rho_pp} is not below 1/2")]
    Unphysical { rho_pp: f64 },

    /// The photon sampler's rate exceeded its declared bound.
    #[error("rate {rate} exceeds declared bound {bound} at t = {t} us")]
    RateBound { t: f64, rate: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
