// SPDX-License-Identifier: Apache-2.0

//! Closed-form two-level saturation physics and the branching fraction.

use std::f64::consts::PI;

use super::AtomParams;
use crate::error::{Error, Result};

const HBAR: f64 = 1.054_571_817e-34; // J·s
const SPEED_OF_LIGHT: f64 = 299_792_458.0; // m/s
/// 1 W/m² expressed in µW/µm².
const W_PER_M2_IN_UW_PER_UM2: f64 = 1e-6;

/// Probability that P decays to S: Γ_SP / (Γ_SP + Γ_DP).
pub fn branching_fraction(atom: &AtomParams) -> f64 {
    atom.gamma_sp / (atom.gamma_sp + atom.gamma_dp)
}

/// s = 2Ω² / (4Δ² + Γ²).
pub fn saturation_parameter(rabi: f64, detuning: f64, linewidth: f64) -> Result<f64> {
    let denom = 4.0 * detuning * detuning + linewidth * linewidth;
    if denom == 0.0 {
        return Err(Error::Domain("saturation parameter undefined for zero detuning and zero linewidth".into()));
    }
    Ok(2.0 * rabi * rabi / denom)
}

/// Rabi frequency that produces saturation parameter `s` at the given detuning.
pub fn rabi_from_saturation(s: f64, detuning: f64, linewidth: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("saturation parameter must be >= 0, got {s}")));
    }
    Ok((0.5 * s * (4.0 * detuning * detuning + linewidth * linewidth)).sqrt())
}

/// Rabi frequency of a beam of intensity `intensity` on a transition of
/// linewidth `linewidth`: Ω² = (I/I_sat)·Γ²/2, the on-resonance relation.
pub fn rabi_from_intensity(intensity: f64, saturation_intensity: f64, linewidth: f64) -> Result<f64> {
    let s0 = s_from_intensity(intensity, saturation_intensity)?;
    Ok(linewidth * (0.5 * s0).sqrt())
}

/// Steady excited-state population of a driven two-level atom: s / (2(1+s)).
pub fn two_level_excited_population(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("saturation parameter must be >= 0, got {s}")));
    }
    if s.is_infinite() {
        return Ok(0.5);
    }
    Ok(s / (2.0 * (1.0 + s)))
}

/// I_sat = ħ Γ_SP ω_SP³ / (12π c²), returned in µW/µm².
pub fn saturation_intensity(atom: &AtomParams) -> f64 {
    let gamma_per_s = atom.gamma_sp * 1e6;
    let w_per_m2 = HBAR * gamma_per_s * atom.omega_sp.powi(3) / (12.0 * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    w_per_m2 * W_PER_M2_IN_UW_PER_UM2
}

/// s = I / I_sat.
pub fn s_from_intensity(intensity: f64, saturation_intensity: f64) -> Result<f64> {
    if !(saturation_intensity > 0.0) {
        return Err(Error::Domain(format!("saturation intensity must be > 0, got {saturation_intensity}")));
    }
    if !(intensity >= 0.0) {
        return Err(Error::Domain(format!("intensity must be >= 0, got {intensity}")));
    }
    Ok(intensity / saturation_intensity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::mhz;
    use proptest::prelude::*;

    #[test]
    fn branching_symmetric_and_calcium() {
        let atom = AtomParams { gamma_sp: 3.0, gamma_dp: 3.0, omega_sp: 0.0 };
        assert_eq!(branching_fraction(&atom), 0.5);
        let p = branching_fraction(&AtomParams::calcium40());
        assert!((p - 0.9357).abs() < 0.0005, "{p}");
    }

    #[test]
    fn branching_tends_to_one() {
        let mut last = 0.0;
        for k in 0..12 {
            let atom = AtomParams { gamma_sp: 1.0, gamma_dp: 10f64.powi(-k), omega_sp: 0.0 };
            let p = branching_fraction(&atom);
            assert!(p > last && p < 1.0);
            last = p;
        }
        assert!(1.0 - last < 1e-10);
    }

    #[test]
    fn saturation_parameter_examples() {
        assert_eq!(saturation_parameter(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(saturation_parameter(3.0, 0.0, 3.0).unwrap(), 2.0);
        assert!(matches!(saturation_parameter(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        // direct evaluation: 2·1.7² / (4·0.9² + 2.2²)
        let s = saturation_parameter(1.7, -0.9, 2.2).unwrap();
        assert!((s - 5.78 / 8.08).abs() < 1e-15);
    }

    #[test]
    fn rabi_inverts_saturation() {
        let omega = rabi_from_saturation(12.0, mhz(-20.0), mhz(21.57)).unwrap();
        let s = saturation_parameter(omega, mhz(-20.0), mhz(21.57)).unwrap();
        assert!((s - 12.0).abs() < 1e-12);
        let omega0 = rabi_from_intensity(2.0, 1.0, 5.0).unwrap();
        assert!((saturation_parameter(omega0, 0.0, 5.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn excited_population_examples() {
        assert_eq!(two_level_excited_population(0.0).unwrap(), 0.0);
        let rho = two_level_excited_population(11.4).unwrap();
        assert!((rho - 0.4597).abs() < 1e-4 && (rho - 0.46).abs() < 0.01);
        assert!(two_level_excited_population(-1.0).is_err());
        let big = two_level_excited_population(1e12).unwrap();
        assert!(big < 0.5 && 0.5 - big < 1e-12);
        assert_eq!(two_level_excited_population(f64::INFINITY).unwrap(), 0.5);
    }

    #[test]
    fn calcium_saturation_intensity() {
        let isat = saturation_intensity(&AtomParams::calcium40());
        assert!((isat / 45.1e-5 - 1.0).abs() < 0.005, "{isat}");
        let zero = AtomParams { gamma_sp: 0.0, ..AtomParams::calcium40() };
        assert_eq!(saturation_intensity(&zero), 0.0);
        let double = AtomParams { gamma_sp: 2.0 * AtomParams::calcium40().gamma_sp, ..AtomParams::calcium40() };
        assert_eq!(saturation_intensity(&double), 2.0 * isat);
    }

    #[test]
    fn intensity_ratio() {
        assert_eq!(s_from_intensity(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(s_from_intensity(45.1e-5, 45.1e-5).unwrap(), 1.0);
        let s = s_from_intensity(5.42e-3, 45.1e-5).unwrap();
        assert!((s - 12.0).abs() < 0.1);
        assert!(s_from_intensity(1.0, 0.0).is_err());
        assert!(s_from_intensity(1.0, -2.0).is_err());
    }

    proptest! {
        #[test]
        fn branching_scale_invariant(gsp in 0.01f64..1e3, gdp in 0.01f64..1e3, k in 1e-3f64..1e3) {
            let a = AtomParams { gamma_sp: gsp, gamma_dp: gdp, omega_sp: 0.0 };
            let b = AtomParams { gamma_sp: k * gsp, gamma_dp: k * gdp, omega_sp: 0.0 };
            prop_assert!((branching_fraction(&a) - branching_fraction(&b)).abs() <= 1e-15);
        }

        #[test]
        fn saturation_even_in_detuning(om in 0.0f64..500.0, d in -500.0f64..500.0, g in 0.01f64..200.0) {
            prop_assert_eq!(saturation_parameter(om, d, g).unwrap(), saturation_parameter(om, -d, g).unwrap());
        }

        #[test]
        fn excited_population_monotone(s in 0.0f64..1e6, ds in 1e-6f64..10.0) {
            let a = two_level_excited_population(s).unwrap();
            let b = two_level_excited_population(s + ds * (1.0 + s)).unwrap();
            prop_assert!(b > a);
        }
    }
}
