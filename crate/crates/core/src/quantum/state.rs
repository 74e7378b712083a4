// SPDX-License-Identifier: Apache-2.0

use nalgebra::SymmetricEigen;

use super::{Level, Matrix3c, RealVector9, Vector9c, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const EIGEN_TOL: f64 = 1e-10;

/// Upper-triangle positions in coordinate order SP, SD, PD.
const OFF_DIAGONAL: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Real coordinates of a (Hermitian) matrix, read from its diagonal and upper
/// triangle.
pub(crate) fn hermitian_coords(m: &Matrix3c) -> RealVector9 {
    let mut x = RealVector9::zeros();
    for i in 0..3 {
        x[i] = m[(i, i)].re;
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        x[3 + 2 * k] = m[(i, j)].re;
        x[4 + 2 * k] = m[(i, j)].im;
    }
    x
}

/// A 3×3 density matrix over (S, P, D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix3c);

impl DensityMatrix {
    /// Validated construction: Hermitian, unit trace, positive semidefinite.
    pub fn new(entries: Matrix3c) -> Result<Self> {
        let rho = Self(entries);
        rho.validate()?;
        Ok(rho)
    }

    /// No validation. Used for intermediate integrator states.
    pub fn from_matrix_unchecked(entries: Matrix3c) -> Self {
        Self(entries)
    }

    pub fn from_vector_unchecked(v: &Vector9c) -> Self {
        Self(Matrix3c::from_column_slice(v.as_slice()))
    }

    /// Real coordinates of the Hermitian part: (ρ_SS, ρ_PP, ρ_DD, Re ρ_SP,
    /// Im ρ_SP, Re ρ_SD, Im ρ_SD, Re ρ_PD, Im ρ_PD).
    pub fn to_real(&self) -> RealVector9 {
        hermitian_coords(&self.0)
    }

    /// Inverse of [`to_real`](Self::to_real); the result is exactly Hermitian.
    pub fn from_real_unchecked(x: &RealVector9) -> Self {
        let mut m = Matrix3c::zeros();
        for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            let z = C64::new(x[3 + 2 * k], x[4 + 2 * k]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        for i in 0..3 {
            m[(i, i)] = C64::from(x[i]);
        }
        Self(m)
    }

    /// |level⟩⟨level|.
    pub fn pure(level: Level) -> Self {
        let mut m = Matrix3c::zeros();
        m[(level.index(), level.index())] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// Diagonal state with the given populations (normalized to unit trace).
    pub fn diagonal(pops: [f64; 3]) -> Result<Self> {
        let total: f64 = pops.iter().sum();
        if pops.iter().any(|p| *p < 0.0) || total <= 0.0 {
            return Err(Error::Precondition("populations must be non-negative with positive sum".into()));
        }
        let mut m = Matrix3c::zeros();
        for (i, p) in pops.iter().enumerate() {
            m[(i, i)] = C64::new(p / total, 0.0);
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3c {
        &self.0
    }

    pub fn get(&self, row: Level, col: Level) -> C64 {
        self.0[(row.index(), col.index())]
    }

    pub fn population(&self, level: Level) -> f64 {
        self.get(level, level).re
    }

    /// (ρ_SS, ρ_PP, ρ_DD).
    pub fn populations(&self) -> [f64; 3] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re]
    }

    /// Column-major vectorization, `vec(ρ)[3j+i] = ρ[i,j]`.
    pub fn to_vector(&self) -> Vector9c {
        Vector9c::from_column_slice(self.0.as_slice())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("density matrix has non-finite entries".into()));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Precondition(format!("density matrix not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Precondition(format!("density matrix trace {tr} is not 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -EIGEN_TOL {
            return Err(Error::Precondition(format!("density matrix has negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    /// Maximum elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_states_are_valid() {
        for level in Level::ALL {
            let rho = DensityMatrix::pure(level);
            rho.validate().unwrap();
            assert_eq!(rho.population(level), 1.0);
        }
    }

    #[test]
    fn vectorization_is_column_major() {
        let mut m = Matrix3c::zeros();
        m[(0, 1)] = C64::new(0.25, 0.5);
        m[(1, 0)] = C64::new(0.25, -0.5);
        let rho = DensityMatrix::from_matrix_unchecked(m);
        let v = rho.to_vector();
        // ρ[S,P] lives at 3·1 + 0
        assert_eq!(v[3], C64::new(0.25, 0.5));
        assert_eq!(v[1], C64::new(0.25, -0.5));
        assert_eq!(DensityMatrix::from_vector_unchecked(&v), rho);
    }

    #[test]
    fn rejects_invalid_states() {
        let mut m = Matrix3c::identity();
        assert!(DensityMatrix::new(m).is_err()); // trace 3
        m = Matrix3c::zeros();
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // negative eigenvalue
        m = Matrix3c::zeros();
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // not Hermitian
    }

    #[test]
    fn real_coordinates_round_trip() {
        let mut m = Matrix3c::zeros();
        m[(0, 0)] = C64::from(0.5);
        m[(2, 2)] = C64::from(0.5);
        m[(0, 2)] = C64::new(0.1, 0.2);
        m[(2, 0)] = C64::new(0.1, -0.2);
        let rho = DensityMatrix::from_matrix_unchecked(m);
        let x = rho.to_real();
        assert_eq!(x[5], 0.1);
        assert_eq!(x[6], 0.2);
        assert_eq!(DensityMatrix::from_real_unchecked(&x), rho);
    }

    #[test]
    fn diagonal_normalizes() {
        let rho = DensityMatrix::diagonal([1.0, 0.0, 1.0]).unwrap();
        assert_eq!(rho.populations(), [0.5, 0.0, 0.5]);
        assert!(DensityMatrix::diagonal([0.0, 0.0, 0.0]).is_err());
    }
}
