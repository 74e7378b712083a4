// SPDX-License-Identifier: Apache-2.0

//! Time evolution of the master equation.
//!
//! [`evolve`] is an adaptive Dormand–Prince 4(5) integrator over a
//! piecewise-constant [`GeneratorSchedule`]; [`expm_oracle`] is an
//! independent scaling-and-squaring matrix exponential used to check it.

mod expm;
mod rk45;
mod schedule;
mod steady;
mod trajectory;

pub use expm::{expm, expm_oracle};
pub use rk45::{evolve, evolve_with, EvolveOptions};
pub use schedule::GeneratorSchedule;
pub use steady::{kernel_dimension, steady_state, steady_state_from};
pub use trajectory::{photon_yield, uniform_grid, Trajectory};

/// Default output spacing: 1 ns.
pub const DEFAULT_GRID_STEP_US: f64 = 1e-3;
