// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 100;
const MIN_EXPECTED: f64 = 5.0;

/// Comparison of per-bin counts with a Poisson law of the same mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonGof {
    pub samples: usize,
    pub mean: f64,
    /// Sample variance over mean; 1 for a Poisson law.
    pub dispersion: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl PoissonGof {
    /// Allowed |dispersion − 1|: four standard errors of the variance ratio.
    pub fn dispersion_tolerance(&self) -> f64 {
        4.0 * (2.0 / (self.samples as f64 - 1.0)).sqrt()
    }

    /// Both the χ² test at level `alpha` and the dispersion check pass.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value > alpha && (self.dispersion - 1.0).abs() <= self.dispersion_tolerance()
    }
}

/// χ² test of the frequencies of count values in `counts` against Poisson
/// with the sample mean. Classes are merged until each expects ≥ 5 entries;
/// one degree of freedom is spent on the mean.
pub fn poisson_gof(counts: &[u64]) -> Result<PoissonGof> {
    let n = counts.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("{n} samples, need at least {MIN_SAMPLES}")));
    }
    let nf = n as f64;
    let mean = counts.iter().sum::<u64>() as f64 / nf;
    if !(mean > 0.0) {
        return Err(Error::InsufficientData("all counts are zero".into()));
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let law = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;

    // Cells [lo, hi] of count values: the first absorbs the left tail, the
    // last the right tail.
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let upper = max_count.max((mean + 12.0 * mean.sqrt() + 12.0) as u64);
    let mut cells: Vec<(u64, u64, f64)> = Vec::new();
    let mut lo = 0u64;
    let mut expected = 0.0;
    for k in 0..=upper {
        expected += nf * if k == 0 { law.cdf(0) } else { law.pmf(k) };
        if expected >= MIN_EXPECTED {
            cells.push((lo, k, expected));
            lo = k + 1;
            expected = 0.0;
        }
    }
    let tail = nf * law.sf(lo.saturating_sub(1)) * f64::from(lo > 0) + if lo == 0 { nf } else { 0.0 };
    match cells.last_mut() {
        Some(last) if tail < MIN_EXPECTED => {
            last.1 = u64::MAX;
            last.2 += tail;
        }
        _ => cells.push((lo, u64::MAX, tail)),
    }
    if cells.len() < 3 {
        return Err(Error::InsufficientData("too few count classes for a chi-square test".into()));
    }
    let mut observed = vec![0u64; cells.len()];
    for &c in counts {
        let i = cells.partition_point(|cell| cell.1 < c);
        observed[i] += 1;
    }
    let chi2: f64 = cells.iter().zip(&observed).map(|(cell, &o)| (o as f64 - cell.2).powi(2) / cell.2).sum();
    let dof = cells.len() - 2;
    let p_value = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?.sf(chi2);
    Ok(PoissonGof { samples: n, mean, dispersion: var / mean, chi2, dof, p_value })
}
