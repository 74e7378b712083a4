// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Liouvillian, Matrix9c, C64};

const TAYLOR_TERMS_MAX: usize = 40;

/// exp(A) by scaling and squaring with a truncated Taylor series.
///
/// A is scaled by 2^-s until its 1-norm is at most 1/2, the series is summed
/// until the next term is negligible, then the result is squared s times.
pub fn expm(a: &Matrix9c) -> Matrix9c {
    let norm = (0..9)
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm == 0.0 {
        return Matrix9c::identity();
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::from(0.5f64.powi(squarings));

    let mut sum = Matrix9c::identity();
    let mut term = Matrix9c::identity();
    for k in 1..=TAYLOR_TERMS_MAX {
        term = term * scaled * C64::from(1.0 / k as f64);
        sum += term;
        let tn = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// unvec(exp(L·t)·vec(ρ₀)). Reference solution for [`evolve`](super::evolve).
pub fn expm_oracle(l: &Liouvillian, t: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagation time must be >= 0, got {t}")));
    }
    let prop = expm(&(l.generator() * C64::from(t)));
    Ok(DensityMatrix::from_vector_unchecked(&(prop * rho0.to_vector())))
}
