// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-shot detection rates. Background and stray-light rates are counts per
/// µs per shot as seen by the counter, i.e. after the detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Probability that a photon emitted on the S–P line is counted.
    pub efficiency: f64,
    /// Dark counts and ambient light, independent of the lasers.
    pub background_rate: f64,
    /// Scattered Doppler light at full probe power; follows the beam envelope.
    pub stray_rate_max: f64,
}

/// Overall detection efficiency of the reference apparatus.
pub const DEFAULT_EFFICIENCY: f64 = 0.0014;
/// Dark-count rate giving about 19.5 counts per 10 ns bin over 3×10⁶ shots.
pub const DEFAULT_BACKGROUND_RATE: f64 = 19.54 / (3.0e6 * 0.01);
/// Stray rate raising that to about 69.8 counts per bin with the probe on.
pub const DEFAULT_STRAY_RATE_MAX: f64 = (69.76 - 19.54) / (3.0e6 * 0.01);

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: DEFAULT_EFFICIENCY,
            background_rate: DEFAULT_BACKGROUND_RATE,
            stray_rate_max: DEFAULT_STRAY_RATE_MAX,
        }
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, background_rate: f64, stray_rate_max: f64) -> Result<Self> {
        let d = Self { efficiency, background_rate, stray_rate_max };
        d.validate()?;
        Ok(d)
    }

    /// No background and no stray light.
    pub fn ideal(efficiency: f64) -> Result<Self> {
        Self::new(efficiency, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Precondition(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        for (name, v) in [("background rate", self.background_rate), ("stray rate", self.stray_rate_max)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_and_checks() {
        DetectorModel::default().validate().unwrap();
        assert!(DetectorModel::new(0.0, 0.0, 0.0).is_err());
        assert!(DetectorModel::new(1.5, 0.0, 0.0).is_err());
        assert!(DetectorModel::new(0.1, -1.0, 0.0).is_err());
        assert!(DetectorModel::new(0.1, 0.0, f64::NAN).is_err());
        assert!((DEFAULT_BACKGROUND_RATE * 3.0e6 * 0.01 - 19.54).abs() < 1e-9);
    }
}
