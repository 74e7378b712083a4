// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value with a one-standard-deviation uncertainty. `degenerate` marks
/// estimates on a boundary where the shot-noise σ collapses to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
    #[serde(default)]
    pub degenerate: bool,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma, degenerate: false }
    }

    /// |value − truth| in units of σ (infinite for σ = 0 unless exact).
    pub fn pull(&self, truth: f64) -> f64 {
        let d = (self.value - truth).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.sigma
        }
    }
}

/// p = N_SP / (N_SP + N_DP) with the binomial shot-noise σ.
pub fn estimate_branching(n_sp: f64, n_dp: f64) -> Result<Estimate> {
    let total = n_sp + n_dp;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain(format!("branching needs a positive total, got {n_sp} + {n_dp}")));
    }
    let p = n_sp / total;
    if p <= 0.0 || p >= 1.0 {
        return Ok(Estimate { value: p, sigma: 0.0, degenerate: true });
    }
    Ok(Estimate::new(p, (p * (1.0 - p) / total).sqrt()))
}

/// η = detected / cycles with σ = √detected / cycles.
pub fn estimate_efficiency(detected: f64, cycles: f64) -> Result<Estimate> {
    if !(cycles > 0.0 && cycles.is_finite()) {
        return Err(Error::Domain(format!("cycle count must be > 0, got {cycles}")));
    }
    if detected <= 0.0 {
        return Ok(Estimate { value: detected / cycles, sigma: 0.0, degenerate: true });
    }
    Ok(Estimate::new(detected / cycles, detected.sqrt() / cycles))
}

/// Excited population and saturation parameter implied by a pumping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationEstimate {
    pub rho_pp: Estimate,
    pub s: Estimate,
}

/// Inverts τ⁻¹ = ρ_PP Γ_DP and ρ_PP = s / (2(1 + s)).
pub fn s_from_tau(tau: f64, gamma_dp: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    if !(gamma_dp > 0.0) {
        return Err(Error::Domain(format!("decay rate must be > 0, got {gamma_dp}")));
    }
    let rho_pp = 1.0 / (tau * gamma_dp);
    if rho_pp >= 0.5 {
        return Err(Error::Unphysical { rho_pp });
    }
    Ok((rho_pp, 2.0 * rho_pp / (1.0 - 2.0 * rho_pp)))
}

/// [`s_from_tau`] with first-order propagation of σ_τ.
pub fn s_from_tau_with_sigma(tau: f64, sigma_tau: f64, gamma_dp: f64) -> Result<SaturationEstimate> {
    let (rho, s) = s_from_tau(tau, gamma_dp)?;
    let sigma_rho = rho * sigma_tau / tau;
    let ds = 2.0 / (1.0 - 2.0 * rho).powi(2);
    Ok(SaturationEstimate { rho_pp: Estimate::new(rho, sigma_rho), s: Estimate::new(s, ds * sigma_rho) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branching_cases() {
        assert_eq!(estimate_branching(10.0, 10.0).unwrap().value, 0.5);
        let d = estimate_branching(10.0, 0.0).unwrap();
        assert!(d.degenerate && d.value == 1.0 && d.sigma == 0.0);
        assert!(estimate_branching(0.0, 0.0).is_err());
        assert!(estimate_branching(-3.0, 1.0).is_err());
    }

    #[test]
    fn efficiency_cases() {
        assert_eq!(estimate_efficiency(0.0, 10.0).unwrap().value, 0.0);
        assert_eq!(estimate_efficiency(10.0, 10.0).unwrap().value, 1.0);
        assert!(estimate_efficiency(1.0, 0.0).is_err());
        let e = estimate_efficiency(1400.0, 1e6).unwrap();
        assert!((e.sigma - 1400f64.sqrt() / 1e6).abs() < 1e-18);
    }

    #[test]
    fn s_from_tau_cases() {
        let (rho, s) = s_from_tau(0.2334, 9.312).unwrap();
        assert!((rho - 0.460).abs() < 1e-3);
        assert!((s - 11.5).abs() < 0.1);
        assert!(matches!(s_from_tau(2.0, 1.0), Err(Error::Unphysical { .. })));
        let (rho, s) = s_from_tau(1e12, 1.0).unwrap();
        assert!(rho < 1e-11 && s < 1e-11);
        assert!(s_from_tau(0.0, 1.0).is_err());
        let est = s_from_tau_with_sigma(0.2334, 0.001, 9.312).unwrap();
        assert!(est.s.sigma > 0.0 && est.rho_pp.sigma > 0.0);
    }
}
