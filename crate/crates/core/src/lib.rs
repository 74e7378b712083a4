// SPDX-License-Identifier: Apache-2.0

//! Transient fluorescence of a single trapped three-level ion.
//!
//! [`quantum`] holds the Λ-system physics, [`integrator`] evolves the master
//! equation, [`instrument`] models the pulse sequencer, AOMs and photon
//! counting, and [`analysis`] recovers branching fraction, detection
//! efficiency, pumping times and saturation parameters from time tags.

pub mod analysis;
pub mod error;
pub mod instrument;
pub mod integrator;
pub mod quantum;

pub use error::{Error, Result};
