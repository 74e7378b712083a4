// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use fluorsim::analysis::{
    bin_timestamps, default_fit_window, estimate_branching, estimate_constant_rate, estimate_efficiency,
    fit_exponential_tail, s_from_tau_with_sigma, subtract_background, CorrectedSeries, CurveReport, Estimate,
    ExperimentReport, FitResult, Histogram, Reference, RunMetadata,
};
use fluorsim::instrument::{derive_seed, DetectorModel, Experiment, Protocol};
use fluorsim::integrator::Trajectory;

use crate::config::{Config, SweepAxis};
use crate::error::{CliError, CliResult, OutputGuard};

/// Stream index reserved for the ion-free reference run of a seed.
const REFERENCE_STREAM: u64 = u64::MAX;

/// Command-line overrides of the `[run]` section.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub repetitions: Option<u64>,
    pub bin_width_ns: Option<f64>,
}

/// Loads a configuration and applies overrides.
pub fn load_config(path: &Path, overrides: Overrides) -> CliResult<Config> {
    let cfg = Config::load(path)?;
    if overrides.seed.is_none() && overrides.repetitions.is_none() && overrides.bin_width_ns.is_none() {
        return Ok(cfg);
    }
    let mut raw = cfg.raw.clone();
    if let Some(s) = overrides.seed {
        raw.run.master_seed = s;
    }
    if let Some(r) = overrides.repetitions {
        raw.run.repetitions = r;
    }
    if let Some(w) = overrides.bin_width_ns {
        raw.run.bin_width_us = w * 1e-3;
    }
    Config::from_raw(raw, cfg.hash)
}

/// In-memory result of a simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub histogram: Histogram,
    /// Same timeline without the ion, for protocols probed with the Doppler beam.
    pub reference: Option<Histogram>,
    pub photons: usize,
    pub stream: Option<fluorsim::instrument::TimeTagStream>,
}

fn acquisition_range(e: &Experiment) -> (f64, f64) {
    let w = e.timeline.acquisition();
    (w[0].start, w[w.len() - 1].end)
}

fn needs_reference(cfg: &Config) -> bool {
    matches!(cfg.protocol, Some(Protocol::SpTransition | Protocol::Stationary)) && cfg.experiment.ion_present
}

/// Runs the configured experiment and its reference.
pub fn simulate(cfg: &Config, keep_stream: bool) -> CliResult<Simulation> {
    let seed = cfg.raw.run.master_seed;
    let bin = cfg.raw.run.bin_width_us;
    let range = acquisition_range(&cfg.experiment);
    let run = cfg.experiment.run(seed)?;
    let histogram = bin_timestamps(&run.stream, bin, range)?;
    let reference = if needs_reference(cfg) {
        let mut e = cfg.experiment.clone();
        e.ion_present = false;
        e.timeline = e.timeline.with_repetitions(cfg.reference_repetitions());
        let stream = e.run(derive_seed(seed, REFERENCE_STREAM))?.stream;
        Some(bin_timestamps(&stream, bin, range)?)
    } else {
        None
    };
    Ok(Simulation {
        trajectory: run.trajectory,
        histogram,
        reference,
        photons: run.stream.len(),
        stream: keep_stream.then_some(run.stream),
    })
}

#[derive(Debug, Serialize)]
struct SimulationMeta<'a> {
    config_hash: &'a str,
    master_seed: u64,
    protocol: Option<Protocol>,
    repetitions: u64,
    reference_repetitions: Option<u64>,
    bin_width_us: f64,
    photons: usize,
    files: Vec<String>,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// `simulate`: writes trajectory.csv, histogram.csv, reference.csv (when a
/// reference run applies), stream.csv (if requested) and meta.json.
pub fn cmd_simulate(config: &Path, out_dir: &Path, overrides: Overrides) -> CliResult<Simulation> {
    let cfg = load_config(config, overrides)?;
    let mut guard = OutputGuard::for_dir(out_dir)?;
    let sim = simulate(&cfg, cfg.raw.run.write_stream)?;
    let mut files = Vec::new();
    let mut out = |name: &str, guard: &mut OutputGuard| {
        files.push(name.to_string());
        guard.track(out_dir.join(name))
    };
    let p = out("trajectory.csv", &mut guard);
    write_with(&p, |w| sim.trajectory.write_csv(w))?;
    let p = out("histogram.csv", &mut guard);
    write_with(&p, |w| sim.histogram.write_csv(w))?;
    if let Some(r) = &sim.reference {
        let p = out("reference.csv", &mut guard);
        write_with(&p, |w| r.write_csv(w))?;
    }
    if let Some(s) = &sim.stream {
        let p = out("stream.csv", &mut guard);
        write_with(&p, |w| s.write_csv(w))?;
    }
    let meta = SimulationMeta {
        config_hash: &cfg.hash,
        master_seed: cfg.raw.run.master_seed,
        protocol: cfg.protocol,
        repetitions: cfg.raw.run.repetitions,
        reference_repetitions: sim.reference.as_ref().map(|r| r.shot_count()),
        bin_width_us: cfg.raw.run.bin_width_us,
        photons: sim.photons,
        files: {
            let mut f = files.clone();
            f.push("meta.json".into());
            f
        },
    };
    let p = guard.track(out_dir.join("meta.json"));
    write_json(&p, &meta)?;
    guard.commit();
    Ok(sim)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_with(path, |w| writeln!(w, "{text}"))
}

/// Time at which light first reaches the ion inside the histogram range.
fn light_arrival(cfg: &Config, hist: &Histogram) -> f64 {
    let dead = cfg.experiment.aom.dead_time;
    cfg.experiment
        .timeline
        .segments()
        .iter()
        .map(|s| s.t_on + dead)
        .filter(|&t| t > hist.t0() && t < hist.end())
        .fold(f64::INFINITY, f64::min)
        .min(hist.end())
}

/// A background-corrected curve with its integral and tail fit.
#[derive(Debug, Clone)]
pub struct CurveAnalysis {
    pub series: CorrectedSeries,
    /// Corrected counts per shot over the whole acquisition, with σ.
    pub total_per_shot: (f64, f64),
    pub fit: CliResult<FitResult>,
}

/// Subtracts `reference` if given, otherwise the constant rate measured in
/// the bins before light arrives, and fits the decaying tail.
pub fn analyze_curve(cfg: &Config, hist: &Histogram, reference: Option<&Histogram>) -> CliResult<CurveAnalysis> {
    let light = light_arrival(cfg, hist);
    let series = match reference {
        Some(r) => subtract_background(hist, Reference::Histogram(r))?,
        None => {
            let (rate, sigma) = estimate_constant_rate(hist, hist.t0(), light)?;
            subtract_background(hist, Reference::Constant { rate, sigma })?
        }
    };
    let total_per_shot = series.total();
    let fit = (|| {
        let window = match cfg.raw.analysis.fit_window_us {
            Some([a, b]) => (a, b),
            None => default_fit_window(&series, (light, hist.end()))?,
        };
        Ok(fit_exponential_tail(&series, window)?)
    })();
    Ok(CurveAnalysis { series, total_per_shot, fit })
}

/// Role of an input histogram for `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sp,
    Dp,
    SpReference,
    DpReference,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::Sp => "sp",
            Role::Dp => "dp",
            Role::SpReference => "sp_ref",
            Role::DpReference => "dp_ref",
        }
    }
}

/// Parses `role=path` with role ∈ {sp, dp, sp_ref, dp_ref}.
pub fn parse_input(arg: &str) -> CliResult<(Role, PathBuf)> {
    let (role, path) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("input '{arg}' must be ROLE=PATH with ROLE one of sp, dp, sp_ref, dp_ref")))?;
    let role = match role {
        "sp" => Role::Sp,
        "dp" => Role::Dp,
        "sp_ref" => Role::SpReference,
        "dp_ref" => Role::DpReference,
        other => return Err(CliError::Usage(format!("unknown input role '{other}'"))),
    };
    Ok((role, PathBuf::from(path)))
}

fn read_histogram(path: &Path) -> CliResult<Histogram> {
    let f = File::open(path).map_err(|e| CliError::input(path, e))?;
    Histogram::read_csv(BufReader::new(f)).map_err(|e| CliError::input(path, e))
}

/// Identifies an input by role, file name and content hash, so the report
/// does not depend on where the files live.
fn describe_input(role: Role, path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(format!("{}={} sha256:{}", role.name(), name, hex::encode(Sha256::digest(&bytes))))
}

/// Builds the report from histograms already in memory.
pub fn analyze(cfg: &Config, inputs: &[(Role, Histogram)], names: Vec<String>) -> CliResult<ExperimentReport> {
    let find = |role: Role| inputs.iter().find(|(r, _)| *r == role).map(|(_, h)| h);
    let sp = find(Role::Sp);
    let dp = find(Role::Dp);
    if sp.is_none() && dp.is_none() {
        return Err(CliError::Usage("analyze needs an sp or dp histogram".into()));
    }
    let mut report = ExperimentReport {
        metadata: RunMetadata { config_hash: cfg.hash.clone(), master_seed: cfg.raw.run.master_seed, inputs: names },
        ..Default::default()
    };
    let gamma_dp = cfg.experiment.params.atom.gamma_dp;
    let mut totals = Vec::new();
    for (role, reference) in [(Role::Sp, Role::SpReference), (Role::Dp, Role::DpReference)] {
        let Some(hist) = find(role) else { continue };
        let curve = analyze_curve(cfg, hist, find(reference))?;
        totals.push((role, curve.total_per_shot, hist.shot_count()));
        let (total, counting, subtraction) = curve.series.total_parts(f64::NEG_INFINITY, f64::INFINITY);
        if subtraction > 0.5 * counting {
            report.notes.push(format!(
                "{}: background subtraction adds σ = {subtraction:.3e} to the integral {total:.3e} per shot \
                 (counting σ {counting:.3e}); branching and efficiency σ cover counting noise only",
                role.name()
            ));
        }
        match curve.fit {
            Ok(fit) => {
                let saturation = if role == Role::Sp {
                    match s_from_tau_with_sigma(fit.tau, fit.sigma_tau(), gamma_dp) {
                        Ok(s) => Some(s),
                        Err(e) => {
                            report.notes.push(format!("{}: saturation not derived: {e}", role.name()));
                            None
                        }
                    }
                } else {
                    None
                };
                report.curves.push(CurveReport {
                    role: role.name().into(),
                    tau: Estimate::new(fit.tau, fit.sigma_tau()),
                    fit,
                    saturation,
                });
            }
            Err(e) => report.notes.push(format!("{}: tail fit skipped: {e}", role.name())),
        }
    }
    let total = |role| totals.iter().find(|(r, _, _)| *r == role).map(|&(_, t, n)| (t, n));
    if let (Some(((sp_t, _), n)), Some(((dp_t, _), _))) = (total(Role::Sp), total(Role::Dp)) {
        // Both totals scaled to the S–P shot count.
        report.branching = Some(estimate_branching(sp_t * n as f64, dp_t * n as f64)?);
    }
    if let Some(((dp_t, _), n)) = total(Role::Dp) {
        report.efficiency = Some(estimate_efficiency(dp_t * n as f64, n as f64)?);
    }
    if cfg.drive.s > 0.0 {
        report.s_from_intensity = Some(Estimate::new(cfg.drive.s, cfg.drive.s_sigma));
    }
    Ok(report)
}

/// `analyze`: reads ROLE=PATH histograms and writes the JSON report.
pub fn cmd_analyze(inputs: &[String], config: &Path, out: &Path, overrides: Overrides) -> CliResult<ExperimentReport> {
    let cfg = load_config(config, overrides)?;
    let mut hists = Vec::new();
    let mut names = Vec::new();
    for arg in inputs {
        let (role, path) = parse_input(arg)?;
        if hists.iter().any(|(r, _)| *r == role) {
            return Err(CliError::Usage(format!("input role '{}' given twice", role.name())));
        }
        hists.push((role, read_histogram(&path)?));
        names.push(describe_input(role, &path)?);
    }
    let report = analyze(&cfg, &hists, names)?;
    let mut guard = OutputGuard::default();
    let out = guard.track(out.to_path_buf());
    write_json(&out, &report)?;
    guard.commit();
    Ok(report)
}

/// One point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub tau: Estimate,
    /// τ fitted to the noise-free expected counts over the same window.
    pub obe_tau: f64,
    pub s_from_tau: Option<Estimate>,
    pub s_from_intensity: Estimate,
    pub fit_window: (f64, f64),
}

/// Expected ion fluorescence per shot and bin, without background or noise.
fn expected_series(cfg: &Config, sim: &Simulation) -> CliResult<CorrectedSeries> {
    let mut e = cfg.experiment.clone();
    e.detector = DetectorModel::ideal(e.detector.efficiency)?;
    let model = e.rate_model(&sim.trajectory);
    let h = &sim.histogram;
    let shots = h.shot_count().max(1) as f64;
    let values: Vec<f64> = (0..h.len()).map(|k| model.expected_counts(h.bin_start(k), h.bin_start(k + 1))).collect();
    let sigma = values.iter().map(|v| (v * shots).max(1.0).sqrt() / shots).collect();
    Ok(CorrectedSeries {
        bin_width: h.bin_width(),
        t0: h.t0(),
        shot_count: h.shot_count(),
        reference_sigma: vec![0.0; values.len()],
        reference: vec![0.0; values.len()],
        reference_correlated: false,
        values,
        sigma,
    })
}

/// Simulates and analyzes one sweep point.
pub fn sweep_point(cfg: &Config, value: f64) -> CliResult<SweepRow> {
    let sim = simulate(cfg, false)?;
    let curve = analyze_curve(cfg, &sim.histogram, sim.reference.as_ref())?;
    let fit = curve.fit?;
    let obe = fit_exponential_tail(&expected_series(cfg, &sim)?, fit.fit_window)?;
    let s_from_tau = s_from_tau_with_sigma(fit.tau, fit.sigma_tau(), cfg.experiment.params.atom.gamma_dp).ok().map(|s| s.s);
    Ok(SweepRow {
        value,
        tau: Estimate::new(fit.tau, fit.sigma_tau()),
        obe_tau: obe.tau,
        s_from_tau,
        s_from_intensity: Estimate::new(cfg.drive.s, cfg.drive.s_sigma),
        fit_window: fit.fit_window,
    })
}

fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Intensity => "intensity",
        SweepAxis::IntensityRatio => "intensity_ratio",
        SweepAxis::Saturation => "saturation",
        SweepAxis::Detuning => "detuning_mhz",
    }
}

/// Runs every point of the configured sweep. Each point uses the configured
/// master seed, so a one-point sweep reproduces `simulate` + `analyze`.
pub fn sweep(cfg: &Config) -> CliResult<(SweepAxis, Vec<SweepRow>)> {
    let sweep_cfg = cfg.raw.sweep.clone().ok_or_else(|| CliError::Usage("the configuration has no [sweep] section".into()))?;
    let rows = sweep_cfg
        .values
        .iter()
        .map(|&v| sweep_point(&cfg.with_sweep_value(sweep_cfg.axis, v)?, v))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((sweep_cfg.axis, rows))
}

pub fn write_sweep_csv<W: Write>(mut w: W, axis: SweepAxis, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "{},tau_us,tau_sigma_us,obe_tau_us,s_from_tau,s_from_tau_sigma,s_from_intensity,s_from_intensity_sigma,fit_start_us,fit_end_us",
        axis_name(axis)
    )?;
    for r in rows {
        let (s, ss) = r.s_from_tau.map_or((String::new(), String::new()), |s| (format!("{:.10e}", s.value), format!("{:.10e}", s.sigma)));
        writeln!(
            w,
            "{:.10e},{:.10e},{:.10e},{:.10e},{s},{ss},{:.10e},{:.10e},{:.10e},{:.10e}",
            r.value, r.tau.value, r.tau.sigma, r.obe_tau, r.s_from_intensity.value, r.s_from_intensity.sigma, r.fit_window.0, r.fit_window.1
        )?;
    }
    Ok(())
}

/// `sweep`: writes sweep.csv and meta.json.
pub fn cmd_sweep(config: &Path, out_dir: &Path, overrides: Overrides) -> CliResult<Vec<SweepRow>> {
    let cfg = load_config(config, overrides)?;
    let mut guard = OutputGuard::for_dir(out_dir)?;
    let (axis, rows) = sweep(&cfg)?;
    let p = guard.track(out_dir.join("sweep.csv"));
    write_with(&p, |w| write_sweep_csv(w, axis, &rows))?;
    let p = guard.track(out_dir.join("meta.json"));
    write_json(
        &p,
        &serde_json::json!({
            "config_hash": cfg.hash,
            "master_seed": cfg.raw.run.master_seed,
            "repetitions": cfg.raw.run.repetitions,
            "axis": axis_name(axis),
            "points": rows.len(),
        }),
    )?;
    guard.commit();
    Ok(rows)
}
