// SPDX-License-Identifier: Apache-2.0

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Level};

/// Density matrices sampled on a strictly increasing time grid (µs).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Precondition("times and states differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("trajectory times must be strictly increasing".into()));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> Option<&DensityMatrix> {
        self.states.first()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn start(&self) -> f64 {
        self.times.first().copied().unwrap_or(f64::NAN)
    }

    pub fn end(&self) -> f64 {
        self.times.last().copied().unwrap_or(f64::NAN)
    }

    /// Population series of one level.
    pub fn populations(&self, level: Level) -> Vec<f64> {
        self.states.iter().map(|s| s.population(level)).collect()
    }

    /// Linear interpolation of a population at `t`; `None` outside the grid.
    pub fn population_at(&self, level: Level, t: f64) -> Option<f64> {
        if self.is_empty() || t < self.start() || t > self.end() {
            return None;
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return Some(self.states[0].population(level));
        }
        if i == self.len() {
            return Some(self.states[i - 1].population(level));
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (y0, y1) = (self.states[i - 1].population(level), self.states[i].population(level));
        Some(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }

    /// CSV with columns t_us, rho_SS, rho_PP, rho_DD and real/imaginary parts
    /// of the SP, SD and PD coherences.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_us,rho_SS,rho_PP,rho_DD,re_rho_SP,im_rho_SP,re_rho_SD,im_rho_SD,re_rho_PD,im_rho_PD")?;
        for (t, rho) in self.times.iter().zip(&self.states) {
            let [ss, pp, dd] = rho.populations();
            let sp = rho.get(Level::S, Level::P);
            let sd = rho.get(Level::S, Level::D);
            let pd = rho.get(Level::P, Level::D);
            writeln!(
                out,
                "{t},{ss},{pp},{dd},{},{},{},{},{},{}",
                sp.re, sp.im, sd.re, sd.im, pd.re, pd.im
            )?;
        }
        Ok(())
    }
}

/// Expected number of emitted S–P photons, ∫ Γ_SP ρ_PP dt, by the
/// trapezoidal rule on the trajectory grid.
pub fn photon_yield(traj: &Trajectory, gamma_sp: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Precondition("empty trajectory".into()));
    }
    let t = traj.times();
    let pp = traj.populations(Level::P);
    let integral: f64 = (1..t.len()).map(|i| 0.5 * (pp[i] + pp[i - 1]) * (t[i] - t[i - 1])).sum();
    Ok(gamma_sp * integral)
}

/// Points `t0, t0+dt, …` ending exactly at `t1`.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Error::Precondition(format!("bad grid [{t0}, {t1}] step {dt}")));
    }
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    if grid.last().map_or(true, |&last| t1 > last) {
        grid.push(t1);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ends_exactly() {
        let g = uniform_grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = uniform_grid(0.0, 1.05, 0.1).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(uniform_grid(2.0, 2.0, 0.1).unwrap(), vec![2.0]);
        assert!(uniform_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn yield_of_dark_trajectory_is_zero() {
        let traj = Trajectory::new(vec![0.0, 1.0], vec![DensityMatrix::pure(Level::S); 2]).unwrap();
        assert_eq!(photon_yield(&traj, 100.0).unwrap(), 0.0);
        let empty = Trajectory::new(vec![], vec![]).unwrap();
        assert!(photon_yield(&empty, 1.0).is_err());
    }

    #[test]
    fn interpolates_populations() {
        let a = DensityMatrix::pure(Level::S);
        let b = DensityMatrix::pure(Level::P);
        let traj = Trajectory::new(vec![0.0, 2.0], vec![a, b]).unwrap();
        assert_eq!(traj.population_at(Level::P, 0.5), Some(0.25));
        assert_eq!(traj.population_at(Level::P, 2.0), Some(1.0));
        assert_eq!(traj.population_at(Level::P, 2.5), None);
    }
}
