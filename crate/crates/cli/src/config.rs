// SPDX-License-Identifier: Apache-2.0

//! The TOML experiment configuration. Frequencies are in MHz, times in µs,
//! intensities in µW/µm² and rates in counts/µs per shot.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fluorsim::instrument::{
    AomModel, Channel, Cooling, DetectorModel, Experiment, Protocol, ProtocolTiming, PulseSegment, PulseTimeline, RampShape,
    Window,
};
use fluorsim::quantum::{
    mhz, rabi_from_intensity, rabi_from_saturation, saturation_intensity, saturation_parameter, AtomParams, LaserParams,
    SystemParams, CA40_GAMMA_DP_MHZ, CA40_GAMMA_SP_MHZ, CA40_SP_FREQUENCY_THZ, DEFAULT_LASER_LINEWIDTH_MHZ,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomSection {
    pub gamma_sp_mhz: f64,
    pub gamma_dp_mhz: f64,
    pub transition_frequency_thz: f64,
}

impl Default for AtomSection {
    fn default() -> Self {
        Self {
            gamma_sp_mhz: CA40_GAMMA_SP_MHZ,
            gamma_dp_mhz: CA40_GAMMA_DP_MHZ,
            transition_frequency_thz: CA40_SP_FREQUENCY_THZ,
        }
    }
}

/// A laser. Its strength is given by exactly one of: `intensity`,
/// `power_uw` with `beam_area_um2`, `intensity_ratio` (I/I_sat),
/// `saturation` (the detuning-dependent s) or `rabi_mhz`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserSection {
    pub intensity: Option<f64>,
    pub power_uw: Option<f64>,
    pub beam_area_um2: Option<f64>,
    pub intensity_ratio: Option<f64>,
    pub saturation: Option<f64>,
    pub rabi_mhz: Option<f64>,
    pub detuning_mhz: f64,
    pub linewidth_mhz: Option<f64>,
    /// Relative 1σ uncertainty of the intensity, for the reported s.
    pub intensity_rel_uncertainty: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub channel: Channel,
    pub t_on_us: f64,
    pub t_off_us: f64,
    #[serde(default = "one")]
    pub power_scale: f64,
    pub detuning_mhz: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimelineSection {
    /// A named protocol, or absent when `segments` are given.
    pub protocol: Option<Protocol>,
    pub pump_us: f64,
    pub wait_us: f64,
    pub probe_us: f64,
    pub pretrigger_us: f64,
    pub pump_power_scale: f64,
    pub probe_power_scale: f64,
    pub cooling_every_shots: Option<u64>,
    pub cooling_us: f64,
    pub segments: Vec<SegmentSection>,
    pub acquisition_us: Vec<[f64; 2]>,
    pub shot_length_us: Option<f64>,
    pub ion_present: Option<bool>,
}

impl Default for TimelineSection {
    fn default() -> Self {
        let t = ProtocolTiming::default();
        Self {
            protocol: None,
            pump_us: t.pump,
            wait_us: t.wait,
            probe_us: t.probe,
            pretrigger_us: t.pretrigger,
            pump_power_scale: t.pump_power_scale,
            probe_power_scale: t.probe_power_scale,
            cooling_every_shots: None,
            cooling_us: 1000.0,
            segments: Vec::new(),
            acquisition_us: Vec::new(),
            shot_length_us: None,
            ion_present: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AomSection {
    pub dead_time_us: f64,
    pub rise_time_us: f64,
    pub shape: RampShape,
}

impl Default for AomSection {
    fn default() -> Self {
        let a = AomModel::default();
        Self { dead_time_us: a.dead_time, rise_time_us: a.rise_time, shape: a.shape }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub background_rate: f64,
    pub stray_rate_max: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorModel::default();
        Self { efficiency: d.efficiency, background_rate: d.background_rate, stray_rate_max: d.stray_rate_max }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub repetitions: u64,
    pub master_seed: u64,
    pub bin_width_us: f64,
    /// Shots of the ion-free reference run; defaults to `repetitions`.
    pub reference_repetitions: Option<u64>,
    pub write_stream: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { repetitions: 1_000_000, master_seed: 0, bin_width_us: 0.01, reference_repetitions: None, write_stream: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Doppler intensity in µW/µm².
    Intensity,
    /// Doppler intensity as I/I_sat.
    IntensityRatio,
    /// Detuning-dependent saturation parameter s.
    Saturation,
    /// Doppler detuning in MHz.
    Detuning,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Fixed [start, end] of the exponential fit; automatic when absent.
    pub fit_window_us: Option<[f64; 2]>,
}

/// The configuration file as written.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub atom: AtomSection,
    pub doppler: LaserSection,
    pub repump: Option<LaserSection>,
    pub timeline: TimelineSection,
    pub aom: AomSection,
    pub detector: DetectorSection,
    pub run: RunSection,
    pub sweep: Option<SweepSection>,
    pub analysis: AnalysisSection,
}

/// A validation failure anchored to a key of the file.
struct FieldError {
    section: &'static str,
    key: &'static str,
    message: String,
}

fn field(section: &'static str, key: &'static str, message: impl Into<String>) -> FieldError {
    FieldError { section, key, message: message.into() }
}

/// Line (1-based) of `key` inside `[section]`, or of the section header.
fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut in_section = false;
    let mut header = None;
    for (i, line) in source.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            let name = l.trim_matches(|c| c == '[' || c == ']').trim();
            in_section = name == section;
            if in_section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if in_section && !key.is_empty() {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// How the Doppler strength was specified, for reporting s with its σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerDrive {
    pub s: f64,
    pub s_sigma: f64,
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub experiment: Experiment,
    pub protocol: Option<Protocol>,
    pub drive: DopplerDrive,
    /// SHA-256 of the configuration file bytes.
    pub hash: String,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e))?;
        let source = String::from_utf8(bytes.clone()).map_err(|e| CliError::input(path, e))?;
        let raw: RawConfig = toml::from_str(&source).map_err(|e| CliError::input(path, e))?;
        let hash = hex::encode(Sha256::digest(&bytes));
        Self::resolve(raw, hash).map_err(|e| {
            let loc = locate(&source, e.section, e.key).map_or(String::new(), |l| format!(":{l}"));
            let key = if e.key.is_empty() { e.section.to_string() } else { format!("{}.{}", e.section, e.key) };
            CliError::Usage(format!("{}{loc}: {key}: {}", path.display(), e.message))
        })
    }

    /// Re-validates after programmatic changes to `raw`.
    pub fn from_raw(raw: RawConfig, hash: String) -> CliResult<Self> {
        Self::resolve(raw, hash).map_err(|e| CliError::Usage(format!("{}.{}: {}", e.section, e.key, e.message)))
    }

    fn resolve(raw: RawConfig, hash: String) -> Result<Self, FieldError> {
        let a = &raw.atom;
        let atom = AtomParams::new(mhz(a.gamma_sp_mhz), mhz(a.gamma_dp_mhz), 2.0 * std::f64::consts::PI * a.transition_frequency_thz * 1e12)
            .map_err(|e| field("atom", "", e.to_string()))?;
        let isat = saturation_intensity(&atom);
        let needs_doppler = !matches!(raw.timeline.protocol, Some(Protocol::BackgroundOnly));
        let (doppler, drive) = laser(&raw.doppler, "doppler", &atom, isat, needs_doppler)?;
        let repump_section = raw.repump.clone().unwrap_or(LaserSection { rabi_mhz: Some(10.0), ..Default::default() });
        let (repump, _) = laser(&repump_section, "repump", &atom, isat, true)?;
        let params = SystemParams::new(atom, doppler, repump).map_err(|e| field("doppler", "", e.to_string()))?;

        let r = &raw.run;
        if !(r.bin_width_us > 0.0 && r.bin_width_us.is_finite()) {
            return Err(field("run", "bin_width_us", "must be > 0"));
        }
        if r.reference_repetitions == Some(0) {
            return Err(field("run", "reference_repetitions", "must be >= 1"));
        }
        let (timeline, protocol, ion_present) = timeline(&raw.timeline, r.repetitions)?;
        let aom = AomModel::new(raw.aom.dead_time_us, raw.aom.rise_time_us, raw.aom.shape)
            .map_err(|e| field("aom", "", e.to_string()))?;
        let d = &raw.detector;
        let detector = DetectorModel::new(d.efficiency, d.background_rate, d.stray_rate_max)
            .map_err(|e| field("detector", "", e.to_string()))?;
        if let Some(s) = &raw.sweep {
            if s.values.is_empty() {
                return Err(field("sweep", "values", "the sweep grid must not be empty"));
            }
            if s.values.iter().any(|v| !v.is_finite() || (s.axis != SweepAxis::Detuning && *v < 0.0)) {
                return Err(field("sweep", "values", "values must be finite and non-negative"));
            }
        }
        if let Some([a, b]) = raw.analysis.fit_window_us {
            if !(a < b) {
                return Err(field("analysis", "fit_window_us", "start must precede end"));
            }
        }
        let mut experiment = Experiment::new(params, timeline, aom, detector);
        experiment.ion_present = ion_present;
        Ok(Self { raw, experiment, protocol, drive, hash })
    }

    pub fn reference_repetitions(&self) -> u64 {
        self.raw.run.reference_repetitions.unwrap_or(self.raw.run.repetitions)
    }

    /// The same configuration with the Doppler beam moved to `value` on `axis`.
    pub fn with_sweep_value(&self, axis: SweepAxis, value: f64) -> CliResult<Self> {
        let mut raw = self.raw.clone();
        let d = &mut raw.doppler;
        let clear = |d: &mut LaserSection| {
            d.intensity = None;
            d.power_uw = None;
            d.beam_area_um2 = None;
            d.intensity_ratio = None;
            d.saturation = None;
            d.rabi_mhz = None;
        };
        match axis {
            SweepAxis::Intensity => {
                clear(d);
                d.intensity = Some(value);
            }
            SweepAxis::IntensityRatio => {
                clear(d);
                d.intensity_ratio = Some(value);
            }
            SweepAxis::Saturation => {
                clear(d);
                d.saturation = Some(value);
            }
            SweepAxis::Detuning => d.detuning_mhz = value,
        }
        raw.sweep = None;
        Self::from_raw(raw, self.hash.clone())
    }
}

fn laser(
    l: &LaserSection,
    section: &'static str,
    atom: &AtomParams,
    isat: f64,
    required: bool,
) -> Result<(LaserParams, DopplerDrive), FieldError> {
    let gamma = atom.gamma_sp;
    let detuning = mhz(l.detuning_mhz);
    let linewidth = mhz(l.linewidth_mhz.unwrap_or(DEFAULT_LASER_LINEWIDTH_MHZ));
    let nonneg = |key: &'static str, v: f64| {
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(field(section, key, format!("must be a non-negative number, got {v}")))
        }
    };
    if !(l.intensity_rel_uncertainty >= 0.0) {
        return Err(field(section, "intensity_rel_uncertainty", "must be >= 0"));
    }
    let given = [l.intensity.is_some(), l.power_uw.is_some(), l.intensity_ratio.is_some(), l.saturation.is_some(), l.rabi_mhz.is_some()];
    let count = given.iter().filter(|&&g| g).count();
    if count > 1 {
        return Err(field(section, "", "give only one of intensity, power_uw, intensity_ratio, saturation, rabi_mhz"));
    }
    if l.beam_area_um2.is_some() != l.power_uw.is_some() {
        return Err(field(section, "beam_area_um2", "power_uw and beam_area_um2 go together"));
    }
    let err = |key: &'static str| move |e: fluorsim::Error| field(section, key, e.to_string());
    let ratio = match (l.intensity, l.power_uw, l.intensity_ratio) {
        (Some(i), _, _) => Some(nonneg("intensity", i)? / isat),
        (_, Some(p), _) => {
            let area = l.beam_area_um2.unwrap_or(0.0);
            if !(area > 0.0) {
                return Err(field(section, "beam_area_um2", "must be > 0"));
            }
            Some(nonneg("power_uw", p)? / area / isat)
        }
        (_, _, Some(r)) => Some(nonneg("intensity_ratio", r)?),
        _ => None,
    };
    let rabi = if let Some(r) = ratio {
        rabi_from_intensity(r, 1.0, gamma).map_err(err("intensity"))?
    } else if let Some(s) = l.saturation {
        rabi_from_saturation(nonneg("saturation", s)?, detuning, gamma).map_err(err("saturation"))?
    } else if let Some(r) = l.rabi_mhz {
        mhz(nonneg("rabi_mhz", r)?)
    } else if required {
        return Err(field(section, "", "set the laser strength with intensity, power_uw, intensity_ratio, saturation or rabi_mhz"));
    } else {
        0.0
    };
    let laser = LaserParams::new(rabi, detuning, linewidth).map_err(err("detuning_mhz"))?;
    let s = saturation_parameter(rabi, detuning, gamma).map_err(err("detuning_mhz"))?;
    Ok((laser, DopplerDrive { s, s_sigma: s * l.intensity_rel_uncertainty }))
}

fn timeline(t: &TimelineSection, repetitions: u64) -> Result<(PulseTimeline, Option<Protocol>, bool), FieldError> {
    let cooling = match t.cooling_every_shots {
        Some(n) => Some(Cooling { every_n_shots: n, duration: t.cooling_us }),
        None => None,
    };
    match t.protocol {
        Some(p) => {
            if !t.segments.is_empty() {
                return Err(field("timeline", "segments", "give either a protocol or explicit segments"));
            }
            let timing = ProtocolTiming {
                pump: t.pump_us,
                wait: t.wait_us,
                probe: t.probe_us,
                pretrigger: t.pretrigger_us,
                pump_power_scale: t.pump_power_scale,
                probe_power_scale: t.probe_power_scale,
            };
            let tl = p.timeline(&timing, repetitions, cooling).map_err(|e| field("timeline", "", e.to_string()))?;
            Ok((tl, Some(p), t.ion_present.unwrap_or(p.ion_present())))
        }
        None => {
            if t.segments.is_empty() && t.acquisition_us.is_empty() {
                return Err(field("timeline", "protocol", "set a protocol or explicit segments"));
            }
            let segments = t
                .segments
                .iter()
                .map(|s| {
                    let seg = PulseSegment::new(s.channel, s.t_on_us, s.t_off_us, s.power_scale);
                    match s.detuning_mhz {
                        Some(d) => seg.with_detuning(mhz(d)),
                        None => seg,
                    }
                })
                .collect();
            let windows = t.acquisition_us.iter().map(|[a, b]| Window::new(*a, *b)).collect();
            let length = t.shot_length_us.ok_or_else(|| field("timeline", "shot_length_us", "required with explicit segments"))?;
            let tl = PulseTimeline::new(segments, windows, length, repetitions, cooling)
                .map_err(|e| field("timeline", "segments", e.to_string()))?;
            Ok((tl, None, t.ion_present.unwrap_or(true)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_finds_keys_and_sections() {
        let src = "[run]\nrepetitions = 5\n\n[doppler]\n# note\ndetuning_mhz = -20\n";
        assert_eq!(locate(src, "doppler", "detuning_mhz"), Some(6));
        assert_eq!(locate(src, "doppler", "missing"), Some(4));
        assert_eq!(locate(src, "run", "repetitions"), Some(2));
        assert_eq!(locate(src, "atom", ""), None);
    }

    #[test]
    fn intensity_ratio_matches_intensity() {
        let mut raw = RawConfig::default();
        raw.timeline.protocol = Some(Protocol::SpTransition);
        raw.doppler.intensity_ratio = Some(4.0);
        let a = Config::from_raw(raw.clone(), String::new()).unwrap();
        let isat = saturation_intensity(&AtomParams::calcium40());
        raw.doppler.intensity_ratio = None;
        raw.doppler.intensity = Some(4.0 * isat);
        let b = Config::from_raw(raw, String::new()).unwrap();
        assert!((a.experiment.params.doppler.rabi - b.experiment.params.doppler.rabi).abs() < 1e-9);
    }

    #[test]
    fn saturation_key_sets_s() {
        let mut raw = RawConfig::default();
        raw.timeline.protocol = Some(Protocol::SpTransition);
        raw.doppler.saturation = Some(12.0);
        raw.doppler.detuning_mhz = -20.0;
        let c = Config::from_raw(raw, String::new()).unwrap();
        assert!((c.drive.s - 12.0).abs() < 1e-9);
    }

    #[test]
    fn conflicting_strengths_rejected() {
        let mut raw = RawConfig::default();
        raw.timeline.protocol = Some(Protocol::SpTransition);
        raw.doppler.saturation = Some(12.0);
        raw.doppler.rabi_mhz = Some(1.0);
        assert!(Config::from_raw(raw, String::new()).is_err());
    }
}
