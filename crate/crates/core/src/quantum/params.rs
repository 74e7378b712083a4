// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::mhz;
use crate::error::{Error, Result};

/// Γ_SP for the 4²P½ → 4²S½ decay of ⁴⁰Ca⁺, in MHz.
pub const CA40_GAMMA_SP_MHZ: f64 = 21.57;
/// Γ_DP for the 4²P½ → 3²D3/2 decay of ⁴⁰Ca⁺, in MHz.
pub const CA40_GAMMA_DP_MHZ: f64 = 1.482;
/// S–P transition frequency in THz.
pub const CA40_SP_FREQUENCY_THZ: f64 = 755.222;
/// Locked laser linewidth in MHz.
pub const DEFAULT_LASER_LINEWIDTH_MHZ: f64 = 0.1;

/// Atomic decay rates and the S–P transition frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// P → S decay rate (rad/µs).
    pub gamma_sp: f64,
    /// P → D decay rate (rad/µs).
    pub gamma_dp: f64,
    /// S–P transition angular frequency (rad/s). Only used for I_sat.
    pub omega_sp: f64,
}

impl AtomParams {
    pub fn new(gamma_sp: f64, gamma_dp: f64, omega_sp: f64) -> Result<Self> {
        let atom = Self { gamma_sp, gamma_dp, omega_sp };
        atom.validate()?;
        Ok(atom)
    }

    /// ⁴⁰Ca⁺ constants.
    pub fn calcium40() -> Self {
        Self {
            gamma_sp: mhz(CA40_GAMMA_SP_MHZ),
            gamma_dp: mhz(CA40_GAMMA_DP_MHZ),
            omega_sp: std::f64::consts::TAU * CA40_SP_FREQUENCY_THZ * 1e12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_sp > 0.0 && self.gamma_sp.is_finite()) {
            return Err(Error::Precondition(format!("gamma_sp must be positive, got {}", self.gamma_sp)));
        }
        if !(self.gamma_dp > 0.0 && self.gamma_dp.is_finite()) {
            return Err(Error::Precondition(format!("gamma_dp must be positive, got {}", self.gamma_dp)));
        }
        if !(self.omega_sp >= 0.0 && self.omega_sp.is_finite()) {
            return Err(Error::Precondition(format!("omega_sp must be non-negative, got {}", self.omega_sp)));
        }
        Ok(())
    }

    /// Total decay rate of P.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_sp + self.gamma_dp
    }
}

impl Default for AtomParams {
    fn default() -> Self {
        Self::calcium40()
    }
}

/// One laser field: real Rabi frequency, signed detuning, linewidth. All rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    pub rabi: f64,
    pub detuning: f64,
    pub linewidth: f64,
}

impl LaserParams {
    pub fn new(rabi: f64, detuning: f64, linewidth: f64) -> Result<Self> {
        let laser = Self { rabi, detuning, linewidth };
        laser.validate()?;
        Ok(laser)
    }

    /// Laser switched off, keeping the default linewidth.
    pub fn off() -> Self {
        Self { rabi: 0.0, detuning: 0.0, linewidth: mhz(DEFAULT_LASER_LINEWIDTH_MHZ) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return Err(Error::Precondition(format!("rabi frequency must be >= 0, got {}", self.rabi)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::Precondition("detuning must be finite".into()));
        }
        if !(self.linewidth >= 0.0 && self.linewidth.is_finite()) {
            return Err(Error::Precondition(format!("linewidth must be >= 0, got {}", self.linewidth)));
        }
        Ok(())
    }

    pub fn with_rabi(self, rabi: f64) -> Self {
        Self { rabi, ..self }
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }
}

/// Everything that enters the Hamiltonian and the collapse operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub atom: AtomParams,
    /// 397 nm laser on S–P.
    pub doppler: LaserParams,
    /// 866 nm laser on D–P.
    pub repump: LaserParams,
}

impl SystemParams {
    pub fn new(atom: AtomParams, doppler: LaserParams, repump: LaserParams) -> Result<Self> {
        let params = Self { atom, doppler, repump };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.doppler.validate()?;
        self.repump.validate()
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { atom: AtomParams::default(), doppler: LaserParams::off(), repump: LaserParams::off() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calcium_defaults_are_valid() {
        let atom = AtomParams::calcium40();
        atom.validate().unwrap();
        assert!((atom.gamma_sp - 135.528).abs() < 1e-3);
        assert!((atom.gamma_dp - 9.3116).abs() < 1e-3);
    }

    #[test]
    fn rejects_non_positive_rates() {
        assert!(AtomParams::new(0.0, 1.0, 0.0).is_err());
        assert!(AtomParams::new(1.0, -1.0, 0.0).is_err());
        assert!(LaserParams::new(-1.0, 0.0, 0.0).is_err());
        assert!(LaserParams::new(1.0, 0.0, -0.1).is_err());
        assert!(LaserParams::new(1.0, f64::NAN, 0.0).is_err());
    }
}
