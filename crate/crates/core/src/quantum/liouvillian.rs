// SPDX-License-Identifier: Apache-2.0

use super::state::hermitian_coords;
use super::{DensityMatrix, Level, Matrix3c, Matrix9c, RealMatrix9, RealVector9, SystemParams, Vector9c, C64};

/// Rotating-frame Hamiltonian H/ħ (rad/µs) in the (S, P, D) basis.
///
/// Detunings sit on the ground-state diagonals, the couplings are the halved
/// real Rabi frequencies, and P is the energy reference.
pub fn build_hamiltonian(params: &SystemParams) -> Matrix3c {
    let (s, p, d) = (Level::S.index(), Level::P.index(), Level::D.index());
    let mut h = Matrix3c::zeros();
    h[(s, s)] = C64::from(params.doppler.detuning);
    h[(d, d)] = C64::from(params.repump.detuning);
    let half_dop = C64::from(0.5 * params.doppler.rabi);
    let half_rep = C64::from(0.5 * params.repump.rabi);
    h[(s, p)] = half_dop;
    h[(p, s)] = half_dop;
    h[(d, p)] = half_rep;
    h[(p, d)] = half_rep;
    h
}

/// The four collapse operators: spontaneous decay P→S, P→D, and laser
/// dephasing of S and D.
pub fn collapse_operators(params: &SystemParams) -> [Matrix3c; 4] {
    let ket_bra = |row: Level, col: Level, rate: f64| {
        let mut c = Matrix3c::zeros();
        c[(row.index(), col.index())] = C64::from(rate.sqrt());
        c
    };
    [
        ket_bra(Level::S, Level::P, params.atom.gamma_sp),
        ket_bra(Level::D, Level::P, params.atom.gamma_dp),
        ket_bra(Level::S, Level::S, params.doppler.linewidth),
        ket_bra(Level::D, Level::D, params.repump.linewidth),
    ]
}

fn kron(a: &Matrix3c, b: &Matrix3c) -> Matrix9c {
    let mut out = Matrix9c::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let aij = a[(i, j)];
            if aij == C64::from(0.0) {
                continue;
            }
            for k in 0..3 {
                for l in 0..3 {
                    out[(3 * i + k, 3 * j + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Dense Lindblad generator acting on column-major vectorized density matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liouvillian(Matrix9c);

impl Liouvillian {
    pub fn from_generator(generator: Matrix9c) -> Self {
        Self(generator)
    }

    pub fn zero() -> Self {
        Self(Matrix9c::zeros())
    }

    pub fn generator(&self) -> &Matrix9c {
        &self.0
    }

    pub fn apply_vector(&self, v: &Vector9c) -> Vector9c {
        self.0 * v
    }

    /// dρ/dt as a 3×3 matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> Matrix3c {
        let v = self.0 * rho.to_vector();
        Matrix3c::from_column_slice(v.as_slice())
    }

    /// Largest modulus of `tr ∘ L`, the row combination that must vanish for
    /// trace preservation.
    pub fn trace_leak(&self) -> f64 {
        let diag = [0usize, 4, 8];
        (0..9)
            .map(|col| diag.iter().map(|&r| self.0[(r, col)]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }

    /// The generator acting on real Hermitian coordinates. L maps Hermitian
    /// matrices to Hermitian matrices, so this restriction is exact.
    pub fn real_generator(&self) -> RealMatrix9 {
        let mut out = RealMatrix9::zeros();
        for k in 0..9 {
            let mut e = RealVector9::zeros();
            e[k] = 1.0;
            let basis = DensityMatrix::from_real_unchecked(&e);
            out.set_column(k, &hermitian_coords(&self.apply(&basis)));
        }
        out
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..9)
            .map(|c| self.0.column(c).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Assemble `L = −i(I⊗H − Hᵀ⊗I) + Σ_m [C̄_m⊗C_m − ½ I⊗C_m†C_m − ½ (C_m†C_m)ᵀ⊗I]`.
pub fn build_liouvillian(params: &SystemParams) -> Liouvillian {
    let h = build_hamiltonian(params);
    let id = Matrix3c::identity();
    let minus_i = C64::new(0.0, -1.0);
    let mut gen = (kron(&id, &h) - kron(&h.transpose(), &id)) * minus_i;
    let half = C64::from(0.5);
    for c in collapse_operators(params) {
        let cdc = c.adjoint() * c;
        gen += kron(&c.conjugate(), &c) - (kron(&id, &cdc) + kron(&cdc.transpose(), &id)) * half;
    }
    Liouvillian(gen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{AtomParams, LaserParams};
    use nalgebra::SymmetricEigen;

    fn params(od: f64, or: f64, dd: f64, dr: f64) -> SystemParams {
        SystemParams {
            atom: AtomParams::calcium40(),
            doppler: LaserParams { rabi: od, detuning: dd, linewidth: 0.0 },
            repump: LaserParams { rabi: or, detuning: dr, linewidth: 0.0 },
        }
    }

    fn sorted_eigenvalues(h: Matrix3c) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn hamiltonian_zero_when_undriven() {
        assert_eq!(build_hamiltonian(&params(0.0, 0.0, 0.0, 0.0)), Matrix3c::zeros());
    }

    #[test]
    fn hamiltonian_two_level_splitting() {
        let ev = sorted_eigenvalues(build_hamiltonian(&params(1.0, 0.0, 0.0, 0.0)));
        for (got, want) in ev.iter().zip([-0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_matches_independent_eigensolver() {
        // Eigenvalues of [[1,1,0],[1,0,1.5],[0,1.5,-1]] from an independent
        // 40-digit eigensolver.
        let want = [-2.195312079598812, 0.3005025697099546, 1.8948095098888576];
        let ev = sorted_eigenvalues(build_hamiltonian(&params(2.0, 3.0, 1.0, -1.0)));
        for (got, want) in ev.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let h = build_hamiltonian(&params(2.3, 0.7, -4.0, 1.5));
        assert_eq!(h, h.adjoint());
    }

    #[test]
    fn zero_generator_for_vanishing_rates() {
        let p = SystemParams {
            atom: AtomParams { gamma_sp: 0.0, gamma_dp: 0.0, omega_sp: 0.0 },
            doppler: LaserParams { rabi: 0.0, detuning: 0.0, linewidth: 0.0 },
            repump: LaserParams { rabi: 0.0, detuning: 0.0, linewidth: 0.0 },
        };
        assert_eq!(*build_liouvillian(&p).generator(), Matrix9c::zeros());
    }

    #[test]
    fn excited_state_decays_at_total_rate() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let l = build_liouvillian(&p);
        let drho = l.apply(&DensityMatrix::pure(Level::P));
        let g = p.atom.gamma_sp + p.atom.gamma_dp;
        assert!((drho[(1, 1)].re + g).abs() < 1e-12);
        assert!((drho[(0, 0)].re - p.atom.gamma_sp).abs() < 1e-12);
        assert!((drho[(2, 2)].re - p.atom.gamma_dp).abs() < 1e-12);
    }

    #[test]
    fn real_generator_agrees_with_complex() {
        let p = params(30.0, 20.0, -40.0, 10.0);
        let l = build_liouvillian(&p);
        let mut m = Matrix3c::zeros();
        m[(0, 0)] = C64::from(0.6);
        m[(1, 1)] = C64::from(0.3);
        m[(2, 2)] = C64::from(0.1);
        m[(0, 1)] = C64::new(0.1, 0.05);
        m[(1, 0)] = C64::new(0.1, -0.05);
        let rho = DensityMatrix::from_matrix_unchecked(m);
        let via_real = DensityMatrix::from_real_unchecked(&(l.real_generator() * rho.to_real()));
        let direct = DensityMatrix::from_matrix_unchecked(l.apply(&rho));
        assert!(via_real.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn trace_preserving() {
        let mut p = params(30.0, 20.0, -40.0, 10.0);
        p.doppler.linewidth = 0.6;
        p.repump.linewidth = 0.3;
        assert!(build_liouvillian(&p).trace_leak() < 1e-12);
    }
}
