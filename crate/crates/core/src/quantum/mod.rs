// SPDX-License-Identifier: Apache-2.0

//! The three-level Λ system {S, P, D}: parameters, states, the rotating-frame
//! Hamiltonian, the Lindblad generator and closed-form saturation physics.
//!
//! Units: time in µs, every rate and frequency stored as angular (rad/µs).
//! Ordinary frequencies in MHz convert through [`mhz`].

mod liouvillian;
mod params;
mod saturation;
mod state;

pub use liouvillian::{build_hamiltonian, build_liouvillian, collapse_operators, Liouvillian};
pub use params::{
    AtomParams, LaserParams, SystemParams, CA40_GAMMA_DP_MHZ, CA40_GAMMA_SP_MHZ, CA40_SP_FREQUENCY_THZ,
    DEFAULT_LASER_LINEWIDTH_MHZ,
};
pub use saturation::{
    branching_fraction, rabi_from_intensity, rabi_from_saturation, s_from_intensity,
    saturation_intensity, saturation_parameter, two_level_excited_population,
};
pub use state::DensityMatrix;

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix3c = Matrix3<C64>;
pub type Matrix9c = SMatrix<C64, 9, 9>;
pub type Vector9c = SVector<C64, 9>;
/// Real coordinates of a Hermitian 3×3 matrix, see [`DensityMatrix::to_real`].
pub type RealVector9 = SVector<f64, 9>;
/// The generator restricted to Hermitian matrices, in real coordinates.
pub type RealMatrix9 = SMatrix<f64, 9, 9>;

/// Basis levels, in the fixed order (S, P, D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    S = 0,
    P = 1,
    D = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::S, Level::P, Level::D];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Angular frequency (rad/µs) of an ordinary frequency given in MHz.
pub fn mhz(f: f64) -> f64 {
    std::f64::consts::TAU * f
}

/// Ordinary frequency in MHz of an angular frequency in rad/µs.
pub fn to_mhz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU
}

/// Column-major vector index of ρ[row, col]: `vec(ρ)[3·col + row]`.
pub fn vec_index(row: Level, col: Level) -> usize {
    3 * col.index() + row.index()
}
