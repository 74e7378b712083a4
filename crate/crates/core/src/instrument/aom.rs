// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Channel, PulseTimeline};
use crate::error::{Error, Result};

/// Shape of the optical turn-on between zero and full power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    Linear,
    /// 3x² − 2x³.
    #[default]
    Smoothstep,
}

impl RampShape {
    /// Normalized ramp on x ∈ [0, 1].
    pub fn eval(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            RampShape::Linear => x,
            RampShape::Smoothstep => x * x * (3.0 - 2.0 * x),
        }
    }
}

/// Acousto-optic switch response: a dead time before any light, then a ramp
/// of duration `rise_time`. Turn-off mirrors turn-on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AomModel {
    /// µs from the logical switch to the first light.
    pub dead_time: f64,
    /// µs from zero to full power.
    pub rise_time: f64,
    #[serde(default)]
    pub shape: RampShape,
}

impl Default for AomModel {
    fn default() -> Self {
        Self { dead_time: 0.2, rise_time: 0.07, shape: RampShape::Smoothstep }
    }
}

impl AomModel {
    pub fn new(dead_time: f64, rise_time: f64, shape: RampShape) -> Result<Self> {
        let aom = Self { dead_time, rise_time, shape };
        aom.validate()?;
        Ok(aom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::Precondition(format!("dead time must be >= 0, got {}", self.dead_time)));
        }
        if !(self.rise_time >= 0.0 && self.rise_time.is_finite()) {
            return Err(Error::Precondition(format!("rise time must be >= 0, got {}", self.rise_time)));
        }
        Ok(())
    }

    /// Fraction of full power `dt` µs after light starts arriving.
    pub fn turn_on(&self, dt: f64) -> f64 {
        if dt < 0.0 {
            0.0
        } else if dt >= self.rise_time {
            1.0
        } else {
            self.shape.eval(dt / self.rise_time)
        }
    }

    /// Light level of one pulse logically switched on at `t_on` and off at
    /// `t_off`, at time `t`, in units of its full power.
    pub fn pulse(&self, t_on: f64, t_off: f64, t: f64) -> f64 {
        let up = self.turn_on(t - (t_on + self.dead_time));
        let down = self.turn_on(t - (t_off + self.dead_time));
        up * (1.0 - down)
    }

    /// Interval during which a pulse gives any light.
    pub fn light_interval(&self, t_on: f64, t_off: f64) -> (f64, f64) {
        (t_on + self.dead_time, t_off + self.dead_time + self.rise_time)
    }
}

/// Optical intensity of `channel` at `t` relative to its configured value:
/// the AOM response of each pulse times its power scale.
pub fn envelope(aom: &AomModel, timeline: &PulseTimeline, channel: Channel, t: f64) -> f64 {
    timeline
        .segments()
        .iter()
        .filter(|s| s.channel == channel)
        .map(|s| s.power_scale * aom.pulse(s.t_on, s.t_off, t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{PulseSegment, Window};

    fn one_pulse(t_on: f64, t_off: f64, scale: f64) -> PulseTimeline {
        PulseTimeline::new(
            vec![PulseSegment::new(Channel::Doppler, t_on, t_off, scale)],
            vec![Window::new(0.0, 3.0)],
            3.0,
            1,
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_before_light_and_midpoint_half() {
        let aom = AomModel::default();
        let tl = one_pulse(0.5, 2.0, 0.8);
        assert_eq!(envelope(&aom, &tl, Channel::Doppler, 0.1), 0.0);
        assert_eq!(envelope(&aom, &tl, Channel::Doppler, 0.5 + 0.2), 0.0);
        let mid = envelope(&aom, &tl, Channel::Doppler, 0.5 + 0.2 + 0.035);
        assert!((mid - 0.4).abs() < 1e-12);
        assert_eq!(envelope(&aom, &tl, Channel::Doppler, 1.5), 0.8);
        assert_eq!(envelope(&aom, &tl, Channel::Repump, 1.5), 0.0);
        let fall_mid = envelope(&aom, &tl, Channel::Doppler, 2.0 + 0.2 + 0.035);
        assert!((fall_mid - 0.4).abs() < 1e-12);
        assert_eq!(envelope(&aom, &tl, Channel::Doppler, 2.3), 0.0);
    }

    #[test]
    fn ten_ninety_width_matches_inverted_smoothstep() {
        // Smoothstep crosses 0.1 and 0.9 at x where 3x² − 2x³ = y; solved by
        // bisection, then compared with the sampled envelope.
        fn invert(y: f64) -> f64 {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid * mid * (3.0 - 2.0 * mid) < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        let fraction = invert(0.9) - invert(0.1);
        assert!(fraction > 0.6 && fraction < 0.62);

        let aom = AomModel::default();
        let tl = one_pulse(0.0, 2.0, 1.0);
        let dt = 1e-5;
        let first = |level: f64| {
            (0..100_000).map(|k| k as f64 * dt).find(|&t| envelope(&aom, &tl, Channel::Doppler, t) >= level).unwrap()
        };
        let width = first(0.9) - first(0.1);
        assert!((width - fraction * aom.rise_time).abs() < 2.0 * dt);
        assert!(first(1e-12) >= 0.2 - dt);
    }

    #[test]
    fn envelope_monotone_on_ramps() {
        let aom = AomModel::default();
        let tl = one_pulse(0.0, 1.0, 1.0);
        let samples: Vec<f64> = (0..=3000).map(|k| envelope(&aom, &tl, Channel::Doppler, k as f64 * 1e-3)).collect();
        for k in 200..270 {
            assert!(samples[k + 1] >= samples[k]);
        }
        for k in 1200..1270 {
            assert!(samples[k + 1] <= samples[k]);
        }
        for w in samples.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.03, "jump {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn instantaneous_switch() {
        let aom = AomModel::new(0.0, 0.0, RampShape::Linear).unwrap();
        assert_eq!(aom.pulse(1.0, 2.0, 0.999), 0.0);
        assert_eq!(aom.pulse(1.0, 2.0, 1.0), 1.0);
        assert_eq!(aom.pulse(1.0, 2.0, 2.0), 0.0);
        assert!(AomModel::new(-0.1, 0.0, RampShape::Linear).is_err());
    }
}
