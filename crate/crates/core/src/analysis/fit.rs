// SPDX-License-Identifier: Apache-2.0

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::CorrectedSeries;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const PARAM_TOL: f64 = 1e-8;
const MIN_BINS: usize = 10;

/// Weighted fit of N(t) = N₀ e^(−(t − t_start)/τ) + C to a corrected series.
/// N₀ is the amplitude at the window start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n0: f64,
    pub tau: f64,
    pub c: f64,
    /// Covariance of (N₀, τ, C).
    pub covariance: [[f64; 3]; 3],
    pub fit_window: (f64, f64),
    pub reduced_chi2: f64,
    pub bins: usize,
    pub iterations: usize,
    /// The log-linear initial guess was unusable and τ₀ = window/3 was used.
    pub init_fallback: bool,
}

impl FitResult {
    pub fn sigma_n0(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn sigma_tau(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn sigma_c(&self) -> f64 {
        self.covariance[2][2].sqrt()
    }
}

/// The fitted model at time `t` for a window starting at `t_start`.
pub fn tail_model(n0: f64, tau: f64, c: f64, t_start: f64, t: f64) -> f64 {
    n0 * (-(t - t_start) / tau).exp() + c
}

struct Problem<'a> {
    t: Vec<f64>,
    y: &'a [f64],
    w: Vec<f64>,
}

impl Problem<'_> {
    fn chi2(&self, p: &Vector3<f64>) -> f64 {
        self.t
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&t, &y), &w)| w * (y - p[0] * (-t / p[1]).exp() - p[2]).powi(2))
            .sum()
    }

    /// JᵀWJ and JᵀW r at `p`.
    fn normal_equations(&self, p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let mut a = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for ((&t, &y), &w) in self.t.iter().zip(self.y).zip(&self.w) {
            let e = (-t / p[1]).exp();
            let j = Vector3::new(e, p[0] * e * t / (p[1] * p[1]), 1.0);
            let r = y - p[0] * e - p[2];
            a += w * j * j.transpose();
            g += w * r * j;
        }
        (a, g)
    }
}

fn initial_guess(t: &[f64], y: &[f64], span: f64) -> (Vector3<f64>, bool) {
    let n = y.len();
    let tail = (n / 10).max(1);
    let c0 = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let half = (n / 2).max(2);
    let pts: Vec<(f64, f64)> = t[..half].iter().zip(&y[..half]).filter(|(_, &v)| v > c0).map(|(&t, &v)| (t, (v - c0).ln())).collect();
    let fallback = |c0: f64| {
        let tau = span / 3.0;
        let n0 = y[0] - c0;
        (Vector3::new(n0, tau, c0), true)
    };
    if 2 * pts.len() <= half || pts.len() < 2 {
        return fallback(c0);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) || !slope.is_finite() {
        return fallback(c0);
    }
    let intercept = my - slope * mx;
    (Vector3::new(intercept.exp(), -1.0 / slope, c0), false)
}

/// Weighted Levenberg–Marquardt fit over the bins whose centres lie in
/// `window`. Weights are 1/σ² from the series.
pub fn fit_exponential_tail(series: &CorrectedSeries, window: (f64, f64)) -> Result<FitResult> {
    let bins = series.bins_between(window.0, window.1);
    if bins.len() < MIN_BINS {
        return Err(Error::InsufficientData(format!(
            "fit window [{}, {}) holds {} bins, need {MIN_BINS}",
            window.0,
            window.1,
            bins.len()
        )));
    }
    if series.sigma[bins.clone()].iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Precondition("every fitted bin needs a positive uncertainty".into()));
    }
    let problem = Problem {
        t: bins.clone().map(|k| series.bin_center(k) - window.0).collect(),
        y: &series.values[bins.clone()],
        w: series.sigma[bins.clone()].iter().map(|s| 1.0 / (s * s)).collect(),
    };
    let span = window.1 - window.0;
    let (mut p, init_fallback) = initial_guess(&problem.t, problem.y, span);
    let y_scale = problem.y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut chi2 = problem.chi2(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (a, g) = problem.normal_equations(&p);
        let mut damped = a;
        for i in 0..3 {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
        }
        let Some(delta) = damped.lu().solve(&g) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + delta;
        let trial_chi2 = if trial[1] > 0.0 { problem.chi2(&trial) } else { f64::INFINITY };
        if trial_chi2 <= chi2 {
            let scale = Vector3::new(y_scale, p[1], y_scale);
            let small = (0..3).all(|i| delta[i].abs() <= PARAM_TOL * (p[i].abs() + PARAM_TOL * scale[i]));
            p = trial;
            chi2 = trial_chi2;
            lambda = (lambda * 0.1).max(1e-12);
            if small {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // No descent direction left: a stationary point.
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::FitDidNotConverge { iterations });
    }
    let (a, _) = problem.normal_equations(&p);
    let cov = a
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular fit information matrix".into()))?;
    let cov = 0.5 * (cov + cov.transpose());
    let dof = problem.t.len().saturating_sub(3).max(1);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    Ok(FitResult {
        n0: p[0],
        tau: p[1],
        c: p[2],
        covariance,
        fit_window: window,
        reduced_chi2: chi2 / dof as f64,
        bins: problem.t.len(),
        iterations,
        init_fallback,
    })
}

/// Automatic window for the decaying tail after the peak found in
/// [search.0, search.1): it starts where the 5-bin moving average first
/// drops below 60 % of its peak and ends at the last bin whose moving average
/// exceeds three times the background uncertainty (the reference σ, or one
/// count when nothing was subtracted).
pub fn default_fit_window(series: &CorrectedSeries, search: (f64, f64)) -> Result<(f64, f64)> {
    let bins = series.bins_between(search.0, search.1);
    if bins.len() < MIN_BINS {
        return Err(Error::InsufficientData("search range holds too few bins for a fit".into()));
    }
    let v = &series.values[bins.clone()];
    let n = v.len();
    let avg: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(n);
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let (peak_k, peak) = avg.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, a)| if a > b.1 { (k, a) } else { b });
    if !(peak > 0.0) {
        return Err(Error::InsufficientData("no positive signal to fit".into()));
    }
    let start = (peak_k..n).find(|&k| avg[k] < 0.6 * peak).ok_or_else(|| Error::InsufficientData("signal never decays below 60 % of its peak".into()))?;
    let floor = 1.0 / series.shot_count.max(1) as f64;
    let threshold = |k: usize| 3.0 * series.reference_sigma[bins.start + k].max(floor);
    let mut end = (start..n).rev().find(|&k| avg[k] > threshold(k)).map_or(start, |k| k + 1);
    if end - start < MIN_BINS {
        end = (start + MIN_BINS).min(n);
    }
    if end - start < MIN_BINS {
        return Err(Error::InsufficientData("decaying tail too short to fit".into()));
    }
    let edge = |k: usize| series.t0 + (bins.start + k) as f64 * series.bin_width;
    Ok((edge(start), edge(end)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n0: f64, tau: f64, c: f64, w: f64, n: usize) -> CorrectedSeries {
        let values: Vec<f64> = (0..n).map(|k| tail_model(n0, tau, c, 0.0, (k as f64 + 0.5) * w)).collect();
        CorrectedSeries {
            bin_width: w,
            t0: 0.0,
            shot_count: 1,
            sigma: values.iter().map(|v: &f64| v.abs().sqrt().max(1.0)).collect(),
            reference_sigma: vec![0.0; n],
            reference: vec![0.0; n],
            reference_correlated: false,
            values,
        }
    }

    #[test]
    fn noiseless_fixed_point() {
        let s = synthetic(100.0, 0.5, 2.0, 0.01, 400);
        let f = fit_exponential_tail(&s, (0.0, 4.0)).unwrap();
        assert!((f.n0 / 100.0 - 1.0).abs() < 1e-6, "{f:?}");
        assert!((f.tau / 0.5 - 1.0).abs() < 1e-6);
        assert!((f.c / 2.0 - 1.0).abs() < 1e-6);
        assert!(f.reduced_chi2 < 1e-10);
        for i in 0..3 {
            assert!(f.covariance[i][i] > 0.0);
            for j in 0..3 {
                assert_eq!(f.covariance[i][j], f.covariance[j][i]);
            }
        }
    }

    #[test]
    fn too_few_bins_and_fallback() {
        let s = synthetic(100.0, 0.5, 2.0, 0.01, 400);
        assert!(matches!(fit_exponential_tail(&s, (0.0, 0.05)), Err(Error::InsufficientData(_))));
        // Rising data defeats the log-linear start; the fit still runs.
        let mut r = synthetic(100.0, 0.5, 2.0, 0.01, 100);
        r.values.reverse();
        let f = fit_exponential_tail(&r, (0.0, 1.0));
        if let Ok(f) = f {
            assert!(f.init_fallback);
        }
    }

    #[test]
    fn window_after_peak() {
        let s = synthetic(100.0, 0.5, 0.0, 0.01, 400);
        let (a, b) = default_fit_window(&s, (0.0, 4.0)).unwrap();
        // 60 % of the (smoothed) peak is reached at τ ln(1/0.6) ≈ 0.255 µs.
        assert!((a - 0.25).abs() < 0.03, "{a}");
        assert!(b > a + 0.1);
    }
}
