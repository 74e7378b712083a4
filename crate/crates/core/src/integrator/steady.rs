// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SVD, U9};

use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Liouvillian, RealMatrix9, RealVector9};

/// Singular values below this fraction of the largest count as zero.
const KERNEL_REL_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;

// Kernels are computed on the real Hermitian-coordinate form of L: it is
// Hermiticity preserving, so its stationary states are Hermitian and the
// real restriction has the same kernel dimension.

fn zero_singular_indices(svd: &SVD<f64, U9, U9>) -> Vec<usize> {
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = KERNEL_REL_TOL * max.max(f64::MIN_POSITIVE);
    (0..9).filter(|&i| svd.singular_values[i] <= tol).collect()
}

/// Dimension of the generator's null space.
pub fn kernel_dimension(l: &Liouvillian) -> usize {
    zero_singular_indices(&SVD::new(l.real_generator(), false, false)).len()
}

fn finish(l: &Liouvillian, x: &RealVector9) -> Result<DensityMatrix> {
    let rho = DensityMatrix::from_real_unchecked(x);
    let residual = l.apply_vector(&rho.to_vector()).norm();
    if residual > RESIDUAL_TOL * l.norm_one().max(1.0) {
        return Err(Error::Precondition(format!("steady-state residual {residual:e} too large")));
    }
    rho.validate()?;
    Ok(rho)
}

/// The unique stationary state of `l`.
///
/// One row of L is replaced by the trace functional and the resulting linear
/// system is solved. A kernel of dimension above one is reported as
/// [`Error::NonUniqueSteadyState`]; use [`steady_state_from`] there.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let dim = kernel_dimension(l);
    if dim == 0 {
        return Err(Error::Precondition("generator has no stationary state (not trace preserving?)".into()));
    }
    if dim > 1 {
        return Err(Error::NonUniqueSteadyState { dimension: dim });
    }
    // Row 0 (the ρ_SS equation) is redundant given trace preservation.
    let mut a: RealMatrix9 = l.real_generator();
    a.row_mut(0).fill(0.0);
    for k in 0..3 {
        a[(0, k)] = 1.0;
    }
    let mut b = RealVector9::zeros();
    b[0] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::NonUniqueSteadyState { dimension: dim })?;
    finish(l, &x)
}

/// Long-time limit of the evolution started from `rho0`.
///
/// With right kernel basis R and left kernel basis W of L, the limit is
/// R (WᵀR)⁻¹ Wᵀ ρ₀: the stationary state selected by the conserved
/// quantities of the initial condition. Works for degenerate kernels.
pub fn steady_state_from(l: &Liouvillian, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    rho0.validate()?;
    let m = l.real_generator();
    let right_svd = SVD::new(m, false, true);
    let left_svd = SVD::new(m.transpose(), false, true);
    let right_idx = zero_singular_indices(&right_svd);
    let left_idx = zero_singular_indices(&left_svd);
    if right_idx.is_empty() {
        return Err(Error::Precondition("generator has no stationary state (not trace preserving?)".into()));
    }
    if right_idx.len() != left_idx.len() {
        return Err(Error::Precondition("left and right kernels differ in dimension".into()));
    }
    let k = right_idx.len();
    let rv = right_svd.v_t.expect("requested");
    let lv = left_svd.v_t.expect("requested");
    let right = DMatrix::from_fn(9, k, |r, c| rv[(right_idx[c], r)]);
    let left = DMatrix::from_fn(9, k, |r, c| lv[(left_idx[c], r)]);
    let overlap = left.transpose() * &right;
    let x0 = DVector::from_column_slice(rho0.to_real().as_slice());
    let coeffs = overlap
        .lu()
        .solve(&(left.transpose() * x0))
        .ok_or(Error::NonUniqueSteadyState { dimension: k })?;
    let x = right * coeffs;
    finish(l, &RealVector9::from_column_slice(x.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_liouvillian, mhz, AtomParams, LaserParams, Level, SystemParams};

    #[test]
    fn decay_only_is_degenerate() {
        let l = build_liouvillian(&SystemParams::default());
        assert_eq!(kernel_dimension(&l), 2);
        assert!(matches!(steady_state(&l), Err(Error::NonUniqueSteadyState { dimension: 2 })));
        // The limit from |P⟩ splits population by the branching fraction.
        let rho = steady_state_from(&l, &DensityMatrix::pure(Level::P)).unwrap();
        let p = crate::quantum::branching_fraction(&AtomParams::calcium40());
        assert!((rho.population(Level::S) - p).abs() < 1e-10);
        assert!((rho.population(Level::D) - (1.0 - p)).abs() < 1e-10);
    }

    #[test]
    fn driven_system_has_unique_state() {
        let params = SystemParams {
            atom: AtomParams::calcium40(),
            doppler: LaserParams::new(mhz(20.0), mhz(-20.0), mhz(0.1)).unwrap(),
            repump: LaserParams::new(mhz(10.0), 0.0, mhz(0.1)).unwrap(),
        };
        let l = build_liouvillian(&params);
        let rho = steady_state(&l).unwrap();
        assert!(l.apply_vector(&rho.to_vector()).norm() < 1e-10);
        let rho2 = steady_state_from(&l, &DensityMatrix::pure(Level::D)).unwrap();
        assert!(rho.max_abs_diff(&rho2) < 1e-10);
    }
}
