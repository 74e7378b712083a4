// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;

use super::{envelope, thin_into, AomModel, BoundedWindow, Channel, DetectorModel, PulseTimeline, ShotRng, TimeTag, TimeTagStream, Window};
use crate::error::{Error, Result};
use crate::integrator::{evolve, steady_state, steady_state_from, uniform_grid, GeneratorSchedule, Trajectory, DEFAULT_GRID_STEP_US};
use crate::quantum::{build_liouvillian, DensityMatrix, LaserParams, Level, SystemParams};

/// Longest piece used to represent a ramping laser as piecewise constant (µs).
const RAMP_PIECE_US: f64 = 1e-3;
/// Shots handled per parallel task.
const SHOT_CHUNK: u64 = 1 << 16;

/// State of the ion at the start of every shot.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Steady state with both lasers on at their configured settings, as left
    /// by Doppler cooling.
    Cooled,
    Pure(Level),
    Given(DensityMatrix),
}

/// A complete simulated measurement.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Lasers at full configured power; the timeline scales them.
    pub params: SystemParams,
    pub timeline: PulseTimeline,
    pub aom: AomModel,
    pub detector: DetectorModel,
    pub ion_present: bool,
    pub initial_state: InitialState,
    /// Spacing of the stored trajectory (µs).
    pub grid_step: f64,
}

/// Output of [`Experiment::run`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub stream: TimeTagStream,
    /// Noise-free single-shot density-matrix evolution.
    pub trajectory: Trajectory,
}

impl Experiment {
    pub fn new(params: SystemParams, timeline: PulseTimeline, aom: AomModel, detector: DetectorModel) -> Self {
        Self {
            params,
            timeline,
            aom,
            detector,
            ion_present: true,
            initial_state: InitialState::Cooled,
            grid_step: DEFAULT_GRID_STEP_US,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.aom.validate()?;
        self.detector.validate()?;
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::Precondition(format!("grid step must be > 0, got {}", self.grid_step)));
        }
        Ok(())
    }

    /// Laser settings of `channel` at time `t`, with the AOM envelope applied.
    pub fn laser_at(&self, channel: Channel, t: f64) -> LaserParams {
        let base = match channel {
            Channel::Doppler => self.params.doppler,
            Channel::Repump => self.params.repump,
        };
        let env = envelope(&self.aom, &self.timeline, channel, t);
        let detuning = self
            .timeline
            .segments()
            .iter()
            .filter(|s| s.channel == channel)
            .find(|s| {
                let (a, b) = self.aom.light_interval(s.t_on, s.t_off);
                t >= a && t < b
            })
            .and_then(|s| s.detuning_override)
            .unwrap_or(base.detuning);
        LaserParams { rabi: base.rabi * env.sqrt(), detuning, linewidth: base.linewidth }
    }

    pub fn params_at(&self, t: f64) -> SystemParams {
        SystemParams {
            atom: self.params.atom,
            doppler: self.laser_at(Channel::Doppler, t),
            repump: self.laser_at(Channel::Repump, t),
        }
    }

    /// Piecewise-constant generator over one shot. Constant stretches become
    /// one piece; ramps are cut into pieces of at most 1 ns, each evaluated
    /// at its midpoint.
    pub fn schedule(&self) -> Result<GeneratorSchedule> {
        let end = self.timeline.shot_length();
        let mut ramps = Vec::new();
        for s in self.timeline.segments() {
            for edge in [s.t_on, s.t_off] {
                let a = edge + self.aom.dead_time;
                ramps.push((a, a + self.aom.rise_time));
            }
        }
        let mut cuts = vec![0.0, end];
        for &(a, b) in &ramps {
            cuts.extend([a, b].into_iter().filter(|&x| x > 0.0 && x < end));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut schedule = GeneratorSchedule::starting_at(0.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let ramping = ramps.iter().any(|&(ra, rb)| mid > ra && mid < rb);
            let pieces = if ramping { ((b - a) / RAMP_PIECE_US).ceil().max(1.0) as usize } else { 1 };
            for k in 0..pieces {
                let lo = a + (b - a) * k as f64 / pieces as f64;
                let hi = if k + 1 == pieces { b } else { a + (b - a) * (k + 1) as f64 / pieces as f64 };
                schedule.push(hi, build_liouvillian(&self.params_at(0.5 * (lo + hi))))?;
            }
        }
        Ok(schedule)
    }

    pub fn initial_density(&self) -> Result<DensityMatrix> {
        match &self.initial_state {
            InitialState::Pure(level) => Ok(DensityMatrix::pure(*level)),
            InitialState::Given(rho) => {
                rho.validate()?;
                Ok(rho.clone())
            }
            InitialState::Cooled => {
                let l = build_liouvillian(&self.params);
                match steady_state(&l) {
                    Err(Error::NonUniqueSteadyState { .. }) => steady_state_from(&l, &DensityMatrix::pure(Level::S)),
                    other => other,
                }
            }
        }
    }

    /// Single-shot evolution on the output grid.
    pub fn trajectory(&self) -> Result<Trajectory> {
        self.validate()?;
        let grid = uniform_grid(0.0, self.timeline.shot_length(), self.grid_step)?;
        evolve(&self.initial_density()?, &self.schedule()?, &grid)
    }

    pub fn rate_model<'a>(&'a self, trajectory: &'a Trajectory) -> RateModel<'a> {
        RateModel::new(self, trajectory)
    }

    /// Simulates every repetition of the timeline. Shot `k` draws its
    /// randomness from (master_seed, k) alone, so the stream does not depend
    /// on thread count.
    pub fn run(&self, master_seed: u64) -> Result<ExperimentRun> {
        let trajectory = self.trajectory()?;
        let stream = self.sample(&trajectory, master_seed)?;
        Ok(ExperimentRun { stream, trajectory })
    }

    /// Photon stream for a trajectory already computed by [`Self::trajectory`].
    pub fn sample(&self, trajectory: &Trajectory, master_seed: u64) -> Result<TimeTagStream> {
        let model = self.rate_model(trajectory);
        let windows: Vec<BoundedWindow> = self
            .timeline
            .acquisition()
            .iter()
            .map(|w| BoundedWindow { start: w.start, end: w.end, rate_max: model.bound(w) })
            .collect();
        let shots = self.timeline.repetitions();
        let chunks = shots.div_ceil(SHOT_CHUNK);
        let rate = |t: f64| model.rate(t);
        let parts: Vec<Vec<TimeTag>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut events = Vec::new();
                let mut times = Vec::new();
                for shot in c * SHOT_CHUNK..((c + 1) * SHOT_CHUNK).min(shots) {
                    times.clear();
                    let mut rng = ShotRng::new(master_seed, shot);
                    thin_into(&rate, &windows, &mut rng, &mut times)?;
                    events.extend(times.iter().map(|&t| TimeTag { shot, t }));
                }
                Ok(events)
            })
            .collect::<Result<_>>()?;
        Ok(TimeTagStream::new(parts.concat(), shots))
    }
}

/// Expected detector count rate (counts/µs/shot) along a computed trajectory.
#[derive(Debug, Clone)]
pub struct RateModel<'a> {
    experiment: &'a Experiment,
    times: &'a [f64],
    excited: Vec<f64>,
    /// η·Γ_SP when the ion is present, else 0.
    scale: f64,
}

impl<'a> RateModel<'a> {
    pub fn new(experiment: &'a Experiment, trajectory: &'a Trajectory) -> Self {
        let scale = if experiment.ion_present {
            experiment.detector.efficiency * experiment.params.atom.gamma_sp
        } else {
            0.0
        };
        Self { experiment, times: trajectory.times(), excited: trajectory.populations(Level::P), scale }
    }

    /// P population, linear between grid points and held beyond the ends.
    pub fn excited_population(&self, t: f64) -> f64 {
        let times = self.times;
        let n = times.len();
        if n == 0 {
            return 0.0;
        }
        if t <= times[0] {
            return self.excited[0];
        }
        if t >= times[n - 1] {
            return self.excited[n - 1];
        }
        // Uniform grid: guess the index, then correct for the short last step.
        let dt = times[1] - times[0];
        let mut k = (((t - times[0]) / dt) as usize).min(n - 2);
        while k > 0 && times[k] > t {
            k -= 1;
        }
        while k + 2 < n && times[k + 1] <= t {
            k += 1;
        }
        let f = (t - times[k]) / (times[k + 1] - times[k]);
        self.excited[k] + f * (self.excited[k + 1] - self.excited[k])
    }

    pub fn rate(&self, t: f64) -> f64 {
        let e = self.experiment;
        let stray = e.detector.stray_rate_max * envelope(&e.aom, &e.timeline, Channel::Doppler, t);
        self.scale * self.excited_population(t).max(0.0) + e.detector.background_rate + stray
    }

    /// Upper bound of [`Self::rate`] over `window`.
    pub fn bound(&self, window: &Window) -> f64 {
        let e = self.experiment;
        let lo = self.times.partition_point(|&t| t <= window.start).saturating_sub(1);
        let hi = self.times.partition_point(|&t| t < window.end).min(self.times.len().saturating_sub(1));
        let peak = self.excited[lo..=hi.max(lo)].iter().copied().fold(0.0, f64::max);
        let bound = self.scale * peak
            + e.detector.background_rate
            + e.detector.stray_rate_max * e.timeline.max_power(Channel::Doppler);
        bound * (1.0 + 1e-9)
    }

    /// Expected counts per shot in [a, b], by composite Simpson integration on
    /// sub-intervals no longer than 0.25 ns.
    pub fn expected_counts(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = 2 * ((b - a) / 5e-4).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let mut sum = self.rate(a) + self.rate(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.rate(a + k as f64 * h);
        }
        sum * h / 3.0
    }
}

/// Expected count rate of `experiment` at time `t`, given its trajectory.
pub fn expected_rate(experiment: &Experiment, trajectory: &Trajectory, t: f64) -> Result<f64> {
    if trajectory.is_empty() || t < trajectory.start() || t > trajectory.end() {
        return Err(Error::Domain(format!(
            "t = {t} outside the trajectory [{}, {}]",
            trajectory.start(),
            trajectory.end()
        )));
    }
    Ok(RateModel::new(experiment, trajectory).rate(t))
}

/// Runs `timeline` on an ion with the given lasers and detector.
pub fn run_experiment(
    params: SystemParams,
    timeline: PulseTimeline,
    aom: AomModel,
    detector: DetectorModel,
    master_seed: u64,
) -> Result<ExperimentRun> {
    Experiment::new(params, timeline, aom, detector).run(master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{Protocol, ProtocolTiming};
    use crate::quantum::{mhz, AtomParams};

    fn experiment(protocol: Protocol, reps: u64) -> Experiment {
        let params = SystemParams::new(
            AtomParams::calcium40(),
            LaserParams::new(mhz(20.0), mhz(-20.0), mhz(0.1)).unwrap(),
            LaserParams::new(mhz(10.0), 0.0, mhz(0.1)).unwrap(),
        )
        .unwrap();
        let tl = protocol.timeline(&ProtocolTiming::default(), reps, None).unwrap();
        let mut e = Experiment::new(params, tl, AomModel::default(), DetectorModel::default());
        e.ion_present = protocol.ion_present();
        e
    }

    #[test]
    fn schedule_covers_shot_and_follows_envelope() {
        let e = experiment(Protocol::SpTransition, 1);
        let s = e.schedule().unwrap();
        assert_eq!(s.start(), 0.0);
        assert_eq!(s.end(), 12.0);
        // Repump pump lit at t = 1, Doppler dark; the reverse during the probe.
        let g1 = s.generator_at(1.0).unwrap().generator().clone();
        let want = build_liouvillian(&SystemParams { doppler: e.params.doppler.with_rabi(0.0), ..e.params });
        assert!((g1 - want.generator()).norm() < 1e-12);
        let g2 = s.generator_at(10.0).unwrap().generator().clone();
        let want = build_liouvillian(&SystemParams { repump: e.params.repump.with_rabi(0.0), ..e.params });
        assert!((g2 - want.generator()).norm() < 1e-12);
        // Ramps are resolved, constant stretches are not.
        assert!(s.len() > 100 && s.len() < 400, "{} pieces", s.len());
    }

    #[test]
    fn pumped_into_s_then_shelved() {
        let e = experiment(Protocol::SpTransition, 1);
        let traj = e.trajectory().unwrap();
        let rho = traj.states()[traj.times().partition_point(|&t| t < 6.9)].clone();
        assert!(rho.population(Level::S) > 1.0 - 1e-6);
        let last = traj.last().unwrap();
        assert!(last.population(Level::D) > 0.99);
    }

    #[test]
    fn rate_bound_holds_on_grid() {
        let e = experiment(Protocol::SpTransition, 1);
        let traj = e.trajectory().unwrap();
        let m = e.rate_model(&traj);
        let w = e.timeline.acquisition()[0];
        let b = m.bound(&w);
        for k in 0..60_000 {
            let t = w.start + w.duration() * k as f64 / 60_000.0;
            assert!(m.rate(t) <= b);
        }
    }

    #[test]
    fn run_is_deterministic_and_matches_expectation() {
        let e = experiment(Protocol::StrayOnly, 20_000);
        let a = e.run(3).unwrap();
        let b = e.run(3).unwrap();
        assert_eq!(a.stream, b.stream);
        let w = e.timeline.acquisition()[0];
        let m = e.rate_model(&a.trajectory);
        let expect = m.expected_counts(w.start, w.end) * 20_000.0;
        let got = a.stream.len() as f64;
        assert!((got - expect).abs() < 5.0 * expect.sqrt(), "{got} vs {expect}");
        assert!(e.run(4).unwrap().stream != a.stream);
        assert!(expected_rate(&e, &a.trajectory, 13.0).is_err());
        assert_eq!(expected_rate(&e, &a.trajectory, 1.0).unwrap(), e.detector.background_rate);
    }

    #[test]
    fn zero_repetitions_give_empty_stream() {
        let e = experiment(Protocol::SpTransition, 0);
        let run = e.run(1).unwrap();
        assert!(run.stream.is_empty());
        assert_eq!(run.stream.shot_count(), 0);
    }

    #[test]
    fn steady_rate_matches_direct_product() {
        // 0.0014 × Γ_SP × ρ_PP with no background or stray light.
        let mut e = experiment(Protocol::Stationary, 1);
        e.detector = DetectorModel::ideal(0.0014).unwrap();
        let traj = e.trajectory().unwrap();
        let t = traj.end() - 0.5;
        let rho_pp = traj.population_at(Level::P, t).unwrap();
        let want = 0.0014 * e.params.atom.gamma_sp * rho_pp;
        assert!((expected_rate(&e, &traj, t).unwrap() - want).abs() < 1e-15);
    }
}
