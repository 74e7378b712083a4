// SPDX-License-Identifier: Apache-2.0

use super::{GeneratorSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, RealMatrix9, RealVector9};

/// Step-size control settings for [`evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Below this step (µs) the problem is declared too stiff.
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, min_step: 1e-9, max_step: f64::INFINITY }
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;

/// Stops closer than this (µs) are treated as one.
const STOP_MERGE: f64 = 1e-12;

/// Evolve with the default tolerances (atol 1e-10, rtol 1e-8).
pub fn evolve(rho0: &DensityMatrix, schedule: &GeneratorSchedule, grid: &[f64]) -> Result<Trajectory> {
    evolve_with(rho0, schedule, grid, &EvolveOptions::default())
}

/// Integrate dρ/dt = L(t)ρ from `grid[0]` and sample at every grid point.
///
/// The state is carried in real Hermitian coordinates, so every sample is
/// exactly Hermitian. Steps never cross a schedule breakpoint; the
/// controller is a PI controller on the max-norm of the embedded error
/// estimate.
pub fn evolve_with(
    rho0: &DensityMatrix,
    schedule: &GeneratorSchedule,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    rho0.validate()?;
    if grid.is_empty() {
        return Err(Error::Precondition("time grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("time grid must be strictly increasing".into()));
    }
    let (t_first, t_last) = (grid[0], grid[grid.len() - 1]);
    if !schedule.covers(t_first, t_last) {
        return Err(Error::Precondition(format!(
            "schedule [{}, {}] does not cover [{t_first}, {t_last}]",
            schedule.start(),
            schedule.end()
        )));
    }

    let breaks: Vec<f64> = schedule.breakpoints().filter(|&b| b > t_first && b < t_last).collect();
    let mut stepper = Stepper::new(*opts);
    let mut y = rho0.to_real();
    let mut states = Vec::with_capacity(grid.len());
    states.push(*rho0);

    let mut t = t_first;
    let mut bi = 0;
    for &target in &grid[1..] {
        // Cross every breakpoint before this grid point, one piece at a time.
        while bi < breaks.len() && breaks[bi] < target - STOP_MERGE {
            let b = breaks[bi];
            if b > t + STOP_MERGE {
                let gen = schedule.real_generator_at(0.5 * (t + b)).expect("covered");
                y = stepper.advance(gen, y, t, b)?;
                t = b;
            }
            bi += 1;
        }
        while bi < breaks.len() && breaks[bi] <= target + STOP_MERGE {
            bi += 1;
        }
        let gen = schedule.real_generator_at(0.5 * (t + target)).expect("covered");
        y = stepper.advance(gen, y, t, target)?;
        t = target;
        states.push(DensityMatrix::from_real_unchecked(&y));
    }
    Trajectory::new(grid.to_vec(), states)
}

struct Stepper {
    opts: EvolveOptions,
    h: Option<f64>,
    err_prev: f64,
}

impl Stepper {
    fn new(opts: EvolveOptions) -> Self {
        Self { opts, h: None, err_prev: 1e-4 }
    }

    fn error_norm(&self, y: &RealVector9, y_new: &RealVector9, err: &RealVector9) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..9 {
            let scale = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y_new[i].abs());
            worst = worst.max(err[i].abs() / scale);
        }
        worst
    }

    /// Integrate from `t0` to `t1` under a fixed generator.
    fn advance(&mut self, l: &RealMatrix9, mut y: RealVector9, t0: f64, t1: f64) -> Result<RealVector9> {
        if l.iter().all(|&x| x == 0.0) {
            return Ok(y);
        }
        let mut h = match self.h {
            Some(h) => h,
            None => (0.01 / l.abs().row_sum().max().max(1e-12)).max(self.opts.min_step),
        };
        h = h.min(self.opts.max_step);
        let mut t = t0;
        let mut k1 = l * y;
        let mut rejected = false;
        while t < t1 {
            let remaining = t1 - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let hc = step;

            let k2 = l * (y + k1 * (hc * A21));
            let k3 = l * (y + (k1 * (A31) + k2 * (A32)) * hc);
            let k4 = l * (y + (k1 * (A41) + k2 * (A42) + k3 * (A43)) * hc);
            let k5 = l * (y + (k1 * (A51) + k2 * (A52) + k3 * (A53) + k4 * (A54)) * hc);
            let k6 = l * (y + (k1 * (A61) + k2 * (A62) + k3 * (A63) + k4 * (A64) + k5 * (A65)) * hc);
            let y_new = y + (k1 * (B1) + k3 * (B3) + k4 * (B4) + k5 * (B5) + k6 * (B6)) * hc;
            let k7 = l * y_new;
            let err_vec = (k1 * (E1) + k3 * (E3) + k4 * (E4) + k5 * (E5) + k6 * (E6) + k7 * (E7)) * hc;
            let err = self.error_norm(&y, &y_new, &err_vec);

            if err <= 1.0 {
                let fac = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-ALPHA) * self.err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let fac = if rejected { fac.min(1.0) } else { fac };
                self.err_prev = err.max(1e-4);
                t = if last { t1 } else { t + step };
                y = y_new;
                k1 = k7;
                // A truncated final step says nothing about the natural step size.
                if !last || step >= h {
                    h = (step * fac).min(self.opts.max_step);
                }
                rejected = false;
            } else {
                let fac = (SAFETY * err.powf(-1.0 / 5.0)).max(MIN_FACTOR);
                h = step * fac;
                rejected = true;
                if h < self.opts.min_step {
                    return Err(Error::Stiffness { t, step: h });
                }
            }
        }
        self.h = Some(h);
        Ok(y)
    }
}
