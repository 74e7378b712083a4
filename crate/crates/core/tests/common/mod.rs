// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use fluorsim::quantum::{mhz, AtomParams, DensityMatrix, LaserParams, Matrix3c, SystemParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random driven parameters in the physically relevant range.
pub fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams {
        atom: AtomParams {
            gamma_sp: mhz(rng.random_range(5.0..30.0)),
            gamma_dp: mhz(rng.random_range(0.5..5.0)),
            omega_sp: 0.0,
        },
        doppler: LaserParams {
            rabi: mhz(rng.random_range(1.0..40.0)),
            detuning: mhz(rng.random_range(-50.0..50.0)),
            linewidth: mhz(rng.random_range(0.0..1.0)),
        },
        repump: LaserParams {
            rabi: mhz(rng.random_range(1.0..40.0)),
            detuning: mhz(rng.random_range(-50.0..50.0)),
            linewidth: mhz(rng.random_range(0.0..1.0)),
        },
    }
}

/// Random valid density matrix: A A† / tr(A A†) for complex Gaussian-ish A.
pub fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let a = Matrix3c::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// Random Hermitian (not necessarily positive) unit-trace matrix.
pub fn random_hermitian(rng: &mut ChaCha8Rng) -> Matrix3c {
    let a = Matrix3c::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (a + a.adjoint()) * C64::from(0.5);
    let tr = h.trace().re;
    let mut h = h;
    for i in 0..3 {
        h[(i, i)] += C64::from((1.0 - tr) / 3.0);
    }
    h
}
