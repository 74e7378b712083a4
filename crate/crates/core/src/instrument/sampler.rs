// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::Exp1;

use super::ShotRng;
use crate::error::{Error, Result};

/// An acquisition interval together with an upper bound on the count rate in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedWindow {
    pub start: f64,
    pub end: f64,
    pub rate_max: f64,
}

/// Samples an inhomogeneous Poisson process by thinning: candidates are drawn
/// at `rate_max` and accepted with probability rate(t)/rate_max. Accepted
/// times are appended to `out` in increasing order.
pub fn thin_into<F, R>(rate: &F, windows: &[BoundedWindow], rng: &mut R, out: &mut Vec<f64>) -> Result<()>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    for w in windows {
        if !(w.rate_max > 0.0) {
            for t in [w.start, 0.5 * (w.start + w.end), w.end] {
                let r = rate(t);
                if r > 0.0 {
                    return Err(Error::RateBound { t, rate: r, bound: w.rate_max });
                }
            }
            continue;
        }
        let mut t = w.start;
        loop {
            let gap: f64 = rng.sample(Exp1);
            t += gap / w.rate_max;
            if t >= w.end {
                break;
            }
            let r = rate(t);
            if r > w.rate_max {
                return Err(Error::RateBound { t, rate: r, bound: w.rate_max });
            }
            if rng.random::<f64>() * w.rate_max < r {
                out.push(t);
            }
        }
    }
    Ok(())
}

/// Photon arrival times of one shot, keyed by (master seed, shot index).
pub fn simulate_shot<F>(rate: F, windows: &[BoundedWindow], master_seed: u64, shot_index: u64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let mut rng = ShotRng::new(master_seed, shot_index);
    let mut out = Vec::new();
    thin_into(&rate, windows, &mut rng, &mut out)?;
    Ok(out)
}
