// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which laser a pulse drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// The S–P cooling/probe beam (UV).
    Doppler,
    /// The D–P repump beam (IR).
    Repump,
}

/// One logical on/off command for a laser. Times are µs from the shot start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub channel: Channel,
    pub t_on: f64,
    pub t_off: f64,
    /// Intensity relative to the configured laser intensity.
    #[serde(default = "one")]
    pub power_scale: f64,
    /// Detuning in rad/µs that replaces the configured one while this pulse is lit.
    #[serde(default)]
    pub detuning_override: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl PulseSegment {
    pub fn new(channel: Channel, t_on: f64, t_off: f64, power_scale: f64) -> Self {
        Self { channel, t_on, t_off, power_scale, detuning_override: None }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning_override = Some(detuning);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_on.is_finite() && self.t_off.is_finite() && self.t_on >= 0.0 && self.t_on < self.t_off) {
            return Err(Error::Precondition(format!(
                "pulse on {:?} needs 0 <= t_on < t_off, got [{}, {}]",
                self.channel, self.t_on, self.t_off
            )));
        }
        if !(self.power_scale >= 0.0 && self.power_scale.is_finite()) {
            return Err(Error::Precondition(format!("power scale must be >= 0, got {}", self.power_scale)));
        }
        if let Some(d) = self.detuning_override {
            if !d.is_finite() {
                return Err(Error::Precondition("detuning override must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Half-open acquisition interval [start, end) in µs from the shot start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Periodic re-cooling between shots. The ion is assumed to be returned to the
/// same cooled state, so this only affects bookkeeping, not the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cooling {
    pub every_n_shots: u64,
    pub duration: f64,
}

/// A repeated sequence of laser pulses with the windows in which photons are
/// recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTimeline {
    segments: Vec<PulseSegment>,
    acquisition: Vec<Window>,
    shot_length: f64,
    repetitions: u64,
    cooling: Option<Cooling>,
}

impl PulseTimeline {
    pub fn new(
        mut segments: Vec<PulseSegment>,
        acquisition: Vec<Window>,
        shot_length: f64,
        repetitions: u64,
        cooling: Option<Cooling>,
    ) -> Result<Self> {
        if !(shot_length > 0.0 && shot_length.is_finite()) {
            return Err(Error::Precondition(format!("shot length must be > 0, got {shot_length}")));
        }
        for s in &segments {
            s.validate()?;
        }
        segments.sort_by(|a, b| a.t_on.total_cmp(&b.t_on));
        for ch in [Channel::Doppler, Channel::Repump] {
            let mut last_off = f64::NEG_INFINITY;
            for s in segments.iter().filter(|s| s.channel == ch) {
                if s.t_on < last_off {
                    return Err(Error::Precondition(format!("overlapping pulses on {ch:?} at t = {}", s.t_on)));
                }
                last_off = s.t_off;
            }
        }
        if acquisition.is_empty() {
            return Err(Error::Precondition("at least one acquisition window is required".into()));
        }
        let mut prev_end = f64::NEG_INFINITY;
        for w in &acquisition {
            if !(w.start >= 0.0 && w.start < w.end && w.end <= shot_length) {
                return Err(Error::Precondition(format!(
                    "acquisition window [{}, {}) must lie inside [0, {shot_length}]",
                    w.start, w.end
                )));
            }
            if w.start < prev_end {
                return Err(Error::Precondition("acquisition windows must be sorted and disjoint".into()));
            }
            prev_end = w.end;
        }
        if let Some(c) = cooling {
            if c.every_n_shots == 0 || !(c.duration >= 0.0) {
                return Err(Error::Precondition("cooling needs every_n_shots >= 1 and duration >= 0".into()));
            }
        }
        Ok(Self { segments, acquisition, shot_length, repetitions, cooling })
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn acquisition(&self) -> &[Window] {
        &self.acquisition
    }

    pub fn shot_length(&self) -> f64 {
        self.shot_length
    }

    pub fn repetitions(&self) -> u64 {
        self.repetitions
    }

    pub fn cooling(&self) -> Option<Cooling> {
        self.cooling
    }

    pub fn with_repetitions(mut self, repetitions: u64) -> Self {
        self.repetitions = repetitions;
        self
    }

    /// Total acquisition time per shot.
    pub fn acquisition_time(&self) -> f64 {
        self.acquisition.iter().map(Window::duration).sum()
    }

    /// Largest power scale among pulses on `channel`.
    pub fn max_power(&self, channel: Channel) -> f64 {
        self.segments.iter().filter(|s| s.channel == channel).map(|s| s.power_scale).fold(0.0, f64::max)
    }
}

/// Durations (µs) shared by the standard protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTiming {
    pub pump: f64,
    pub wait: f64,
    pub probe: f64,
    /// Recording starts this long before the probe is switched on.
    pub pretrigger: f64,
    pub pump_power_scale: f64,
    pub probe_power_scale: f64,
}

impl Default for ProtocolTiming {
    fn default() -> Self {
        Self { pump: 5.0, wait: 2.0, probe: 5.0, pretrigger: 1.0, pump_power_scale: 1.0, probe_power_scale: 1.0 }
    }
}

impl ProtocolTiming {
    /// Logical switch-on time of the probe.
    pub fn probe_start(&self) -> f64 {
        self.pump + self.wait
    }
}

/// Standard measurement sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Pump into S with the repump alone, then probe with the Doppler beam;
    /// every probe photon heralds an S→D decay.
    SpTransition,
    /// Pump into D with the Doppler beam alone, then probe with the repump.
    DpTransition,
    /// Prepare S, then both beams on: stationary fluorescence.
    Stationary,
    /// Doppler probe without an ion: scattered laser light only.
    StrayOnly,
    /// No light and no ion: detector background only.
    BackgroundOnly,
}

impl Protocol {
    pub fn ion_present(self) -> bool {
        !matches!(self, Protocol::StrayOnly | Protocol::BackgroundOnly)
    }

    pub fn timeline(self, timing: &ProtocolTiming, repetitions: u64, cooling: Option<Cooling>) -> Result<PulseTimeline> {
        let t = timing;
        for (name, v) in [("pump", t.pump), ("wait", t.wait), ("probe", t.probe), ("pretrigger", t.pretrigger)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("{name} duration must be >= 0, got {v}")));
            }
        }
        if !(t.probe > 0.0) {
            return Err(Error::Precondition("probe duration must be > 0".into()));
        }
        if t.pretrigger > t.probe_start() {
            return Err(Error::Precondition(format!(
                "pretrigger {} exceeds the time before the probe {}",
                t.pretrigger,
                t.probe_start()
            )));
        }
        let t_probe = t.probe_start();
        let end = t_probe + t.probe;
        let pump = |ch| PulseSegment::new(ch, 0.0, t.pump, t.pump_power_scale);
        let probe = |ch| PulseSegment::new(ch, t_probe, end, t.probe_power_scale);
        let mut segments = Vec::new();
        match self {
            Protocol::SpTransition => {
                if t.pump > 0.0 {
                    segments.push(pump(Channel::Repump));
                }
                segments.push(probe(Channel::Doppler));
            }
            Protocol::DpTransition => {
                if t.pump > 0.0 {
                    segments.push(pump(Channel::Doppler));
                }
                segments.push(probe(Channel::Repump));
            }
            Protocol::Stationary => {
                if t.pump > 0.0 {
                    segments.push(pump(Channel::Repump));
                }
                segments.push(probe(Channel::Doppler));
                segments.push(probe(Channel::Repump));
            }
            Protocol::StrayOnly => segments.push(probe(Channel::Doppler)),
            Protocol::BackgroundOnly => {}
        }
        PulseTimeline::new(segments, vec![Window::new(t_probe - t.pretrigger, end)], end, repetitions, cooling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sp_protocol_layout() {
        let tl = Protocol::SpTransition.timeline(&ProtocolTiming::default(), 10, None).unwrap();
        assert_eq!(tl.segments().len(), 2);
        assert_eq!(tl.segments()[0].channel, Channel::Repump);
        assert_eq!(tl.segments()[1].t_on, 7.0);
        assert_eq!(tl.acquisition(), &[Window::new(6.0, 12.0)]);
        assert_eq!(tl.shot_length(), 12.0);
        assert_eq!(tl.acquisition_time(), 6.0);
    }

    #[test]
    fn rejects_bad_timelines() {
        let seg = PulseSegment::new(Channel::Doppler, 0.0, 2.0, 1.0);
        let win = vec![Window::new(0.0, 1.0)];
        assert!(PulseTimeline::new(vec![seg], win.clone(), 0.0, 1, None).is_err());
        assert!(PulseTimeline::new(vec![seg], win.clone(), 2.0, 0, None).is_ok());
        let bad = PulseSegment::new(Channel::Doppler, 1.0, 1.0, 1.0);
        assert!(PulseTimeline::new(vec![bad], win.clone(), 2.0, 1, None).is_err());
        let overlap = PulseSegment::new(Channel::Doppler, 1.0, 3.0, 1.0);
        assert!(PulseTimeline::new(vec![seg, overlap], win.clone(), 4.0, 1, None).is_err());
        let other = PulseSegment::new(Channel::Repump, 1.0, 3.0, 1.0);
        assert!(PulseTimeline::new(vec![seg, other], win, 4.0, 1, None).is_ok());
        assert!(PulseTimeline::new(vec![seg], vec![Window::new(0.0, 5.0)], 4.0, 1, None).is_err());
        assert!(PulseTimeline::new(vec![seg], vec![], 4.0, 1, None).is_err());
        let t = ProtocolTiming { pretrigger: 10.0, ..Default::default() };
        assert!(Protocol::SpTransition.timeline(&t, 1, None).is_err());
    }

    #[test]
    fn empty_protocols() {
        let tl = Protocol::BackgroundOnly.timeline(&ProtocolTiming::default(), 1, None).unwrap();
        assert!(tl.segments().is_empty());
        assert!(!Protocol::BackgroundOnly.ion_present());
        assert!(Protocol::Stationary.ion_present());
    }
}
