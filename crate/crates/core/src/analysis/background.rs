// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::Histogram;
use crate::error::{Error, Result};

/// What to subtract from a histogram.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// A run of the same timeline without the ion.
    Histogram(&'a Histogram),
    /// A constant rate (counts/µs/shot) with its uncertainty.
    Constant { rate: f64, sigma: f64 },
}

/// Background-corrected counts per shot per bin. Values may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedSeries {
    pub bin_width: f64,
    pub t0: f64,
    pub shot_count: u64,
    pub values: Vec<f64>,
    /// Total per-bin uncertainty: raw Poisson σ and reference σ in quadrature.
    pub sigma: Vec<f64>,
    /// Per-bin uncertainty of the subtracted reference alone.
    pub reference_sigma: Vec<f64>,
    /// Subtracted reference, per shot per bin.
    pub reference: Vec<f64>,
    /// True when the reference error is one shared number (a constant
    /// rate), so it adds linearly rather than in quadrature across bins.
    #[serde(default)]
    pub reference_correlated: bool,
}

/// Poisson σ of an aggregate count normalized by `shots`; an empty bin is
/// given the σ of a single count.
fn count_sigma(count: u64, shots: u64) -> f64 {
    (count.max(1) as f64).sqrt() / shots.max(1) as f64
}

/// counts/N − reference, with propagated per-bin uncertainty.
pub fn subtract_background(hist: &Histogram, reference: Reference<'_>) -> Result<CorrectedSeries> {
    if hist.shot_count() == 0 {
        return Err(Error::Precondition("histogram has no shots".into()));
    }
    let n = hist.len();
    let reference_correlated = matches!(reference, Reference::Constant { .. });
    let (reference, reference_sigma): (Vec<f64>, Vec<f64>) = match reference {
        Reference::Histogram(r) => {
            if !hist.same_grid(r) {
                return Err(Error::Precondition("reference histogram has a different bin grid".into()));
            }
            if r.shot_count() == 0 {
                return Err(Error::Precondition("reference histogram has no shots".into()));
            }
            (r.normalized(), r.counts().iter().map(|&c| count_sigma(c, r.shot_count())).collect())
        }
        Reference::Constant { rate, sigma } => {
            if !(rate.is_finite() && sigma >= 0.0) {
                return Err(Error::Precondition(format!("invalid constant background {rate} ± {sigma}")));
            }
            (vec![rate * hist.bin_width(); n], vec![sigma * hist.bin_width(); n])
        }
    };
    let raw = hist.normalized();
    let values = raw.iter().zip(&reference).map(|(a, b)| a - b).collect();
    let sigma = hist
        .counts()
        .iter()
        .zip(&reference_sigma)
        .map(|(&c, rs)| count_sigma(c, hist.shot_count()).hypot(*rs))
        .collect();
    Ok(CorrectedSeries {
        bin_width: hist.bin_width(),
        t0: hist.t0(),
        shot_count: hist.shot_count(),
        values,
        sigma,
        reference_sigma,
        reference,
        reference_correlated,
    })
}

/// Mean rate (counts/µs/shot) and its σ from the bins whose centres lie in [a, b).
pub fn estimate_constant_rate(hist: &Histogram, a: f64, b: f64) -> Result<(f64, f64)> {
    let bins = hist.bins_between(a, b);
    if bins.is_empty() || hist.shot_count() == 0 {
        return Err(Error::InsufficientData(format!("no bins with shots in [{a}, {b})")));
    }
    let total: u64 = hist.counts()[bins.clone()].iter().sum();
    let exposure = hist.shot_count() as f64 * bins.len() as f64 * hist.bin_width();
    Ok((total as f64 / exposure, (total.max(1) as f64).sqrt() / exposure))
}

impl CorrectedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.bin_width
    }

    /// Indices of bins whose centres lie in [a, b).
    pub fn bins_between(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let n = self.values.len();
        let first = (0..n).find(|&k| self.bin_center(k) >= a).unwrap_or(n);
        let last = (first..n).find(|&k| self.bin_center(k) >= b).unwrap_or(n);
        first..last
    }

    /// Adds the reference back: the normalized raw series.
    pub fn restored(&self) -> Vec<f64> {
        self.values.iter().zip(&self.reference).map(|(v, r)| v + r).collect()
    }

    /// Sum of corrected values per shot over bins with centres in [a, b), with σ.
    pub fn total_between(&self, a: f64, b: f64) -> (f64, f64) {
        let (sum, counting, reference) = self.total_parts(a, b);
        (sum, counting.hypot(reference))
    }

    /// Sum over bins with centres in [a, b), with the σ from the counts of
    /// this histogram and the σ from the subtracted reference separately.
    pub fn total_parts(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let bins = self.bins_between(a, b);
        let sum = self.values[bins.clone()].iter().sum();
        let ref_sigma = &self.reference_sigma[bins.clone()];
        let counting: f64 = self.sigma[bins].iter().zip(ref_sigma).map(|(s, r)| (s * s - r * r).max(0.0)).sum();
        let reference = if self.reference_correlated {
            ref_sigma.iter().sum()
        } else {
            ref_sigma.iter().map(|r| r * r).sum::<f64>().sqrt()
        };
        (sum, counting.sqrt(), reference)
    }

    /// Sum of all corrected values per shot, with σ.
    pub fn total(&self) -> (f64, f64) {
        self.total_between(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_start_us,value,sigma")?;
        for (k, (v, s)) in self.values.iter().zip(&self.sigma).enumerate() {
            writeln!(w, "{:.9e},{:.12e},{:.12e}", self.t0 + k as f64 * self.bin_width, v, s)?;
        }
        Ok(())
    }
}
