//! Measurement schedule, feedback, trajectory ensembles and the
//! inter-measurement-time sweep.
//!
//! Ordering at every measurement instant: evolve over the preceding
//! interval, measure, then update the controls (feedback trigger, and the
//! interaction switch-off at `t_f`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{asymptotic_state, expected_label, sector_roles};
use crate::dynamics::{apply_unitary, evolve_density, exp_hermitian, PropagatorConfig};
use crate::error::{Error, Result};
use crate::measurement::{
    measure_nonselective, measure_selective, MeasurementRecord, ReadoutSequence,
};
use crate::metrics::{bell_fidelity, concurrence, trace_distance};
use crate::model::{
    bell_state, hamiltonian_with, BasisLabel, BellLabel, ControlState, FeedbackMode, ModelParams,
    Outcome,
};
use crate::qcore::{partial_trace_ancilla, DensityMatrix, PureState};

// Two instants closer than this are the same measurement time.
const TIME_EPS: f64 = 1e-9;

/// Samples stored per inter-measurement interval, the post-measurement
/// sample included.
pub const SAMPLES_PER_INTERVAL: usize = 10;

/// Consecutive identical readouts that count as a stabilized sequence.
pub const STABLE_READOUTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub tau: f64,
    pub t_f: f64,
    pub h_z: f64,
    pub initial: BasisLabel,
    pub feedback_mode: FeedbackMode,
    /// Measurement interval after the trigger in Zeno mode.
    pub zeno_tau: f64,
    pub master_seed: u64,
    pub n_traj: usize,
    pub substep: f64,
    /// Extra time simulated after `t_f` to check that the targets are stationary.
    pub post_t_f_extension: f64,
    pub continuous_ramp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            t_f: 10.0,
            h_z: 50.0,
            initial: BasisLabel::default(),
            feedback_mode: FeedbackMode::Ramp,
            zeno_tau: 0.02,
            master_seed: 0,
            n_traj: 2000,
            substep: 1e-3,
            post_t_f_extension: 2.0,
            continuous_ramp: false,
        }
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

impl RunConfig {
    /// Full check for selective runs: [`RunConfig::validate_parameters`]
    /// plus `t_f` being a whole number of measurement intervals.
    pub fn validate(&self) -> Result<()> {
        self.validate_parameters()?;
        let steps = (self.t_f / self.tau).round();
        if steps < 1.0 || (steps * self.tau - self.t_f).abs() > TIME_EPS * self.t_f.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_f = {} must be an integer multiple of tau = {}",
                self.t_f, self.tau
            )));
        }
        Ok(())
    }

    /// Ranges of the individual parameters.
    pub fn validate_parameters(&self) -> Result<()> {
        positive("tau", self.tau)?;
        positive("t_f", self.t_f)?;
        positive("substep", self.substep)?;
        positive("zeno_tau", self.zeno_tau)?;
        ModelParams::with_field(self.h_z)?;
        if self.substep > self.tau {
            return Err(Error::InvalidParameter(format!(
                "substep {} exceeds tau {}",
                self.substep, self.tau
            )));
        }
        if self.zeno_tau > self.tau {
            return Err(Error::InvalidParameter(format!(
                "zeno_tau {} exceeds tau {}",
                self.zeno_tau, self.tau
            )));
        }
        if !(self.post_t_f_extension >= 0.0) || !self.post_t_f_extension.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "post_t_f_extension must be non-negative, got {}",
                self.post_t_f_extension
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            j_x: 1.0,
            h_z: self.h_z,
        }
    }

    pub fn propagator(&self) -> PropagatorConfig {
        PropagatorConfig {
            substep: self.substep,
            piecewise_exact: true,
        }
    }

    pub fn initial_state(&self) -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::basis(8, self.initial.index())).expect("basis state")
    }

    /// Number of measurements up to and including `t_f`.
    pub fn measurements_to_t_f(&self) -> usize {
        (self.t_f / self.tau).round() as usize
    }
}

/// SplitMix64 finalizer applied to `master + (k + 1) * 0x9E3779B97F4A7C15`.
///
/// Gives every trajectory of an ensemble its own well-mixed 64-bit seed,
/// independent of execution order.
pub fn mix_seed(master: u64, k: u64) -> u64 {
    let mut z = master.wrapping_add((k.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub label: BellLabel,
    /// `<bell|rho|bell>` for the winning label.
    pub overlap: f64,
    /// Another label reached the same overlap; the first in enum order wins.
    pub degenerate: bool,
}

/// Bell state with the largest projector overlap.
pub fn classify_final(rho_bc: &DensityMatrix) -> Classification {
    assert_eq!(rho_bc.dim(), 4, "classification acts on the target pair");
    let overlaps: Vec<(BellLabel, f64)> = BellLabel::ALL
        .into_iter()
        .map(|label| (label, rho_bc.expectation(&bell_state(label))))
        .collect();
    let (label, overlap) =
        overlaps
            .iter()
            .copied()
            .fold((BellLabel::PhiPlus, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 + 1e-12 {
                    cur
                } else {
                    best
                }
            });
    let degenerate = overlaps
        .iter()
        .filter(|(_, o)| (o - overlap).abs() <= 1e-12)
        .count()
        > 1;
    Classification {
        label,
        overlap,
        degenerate,
    }
}

/// State of the target pair at one sample time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub rho_bc: DensityMatrix,
    pub u_h: f64,
    pub u_j: f64,
    /// Set on the sample taken right after a measurement.
    pub readout: Option<Outcome>,
    pub concurrence: f64,
}

impl Snapshot {
    pub fn bell_population(&self, label: BellLabel) -> f64 {
        self.rho_bc.expectation(&bell_state(label))
    }

    /// `<Phi+| rho_BC |Phi->`.
    pub fn phi_coherence(&self) -> num_complex::Complex64 {
        self.rho_bc.matrix().sandwich(
            &bell_state(BellLabel::PhiPlus),
            &bell_state(BellLabel::PhiMinus),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: RunConfig,
    pub seed: u64,
    pub readouts: ReadoutSequence,
    pub samples: Vec<Snapshot>,
    /// Fidelity of every sample to the final Bell state.
    pub fidelity_to_final: Vec<f64>,
    pub final_label: BellLabel,
    pub final_overlap: f64,
    pub degenerate: bool,
    pub t_star: Option<f64>,
    /// Reduced state right after the measurement at `t_f`.
    pub rho_bc_at_t_f: DensityMatrix,
    pub final_state: DensityMatrix,
    /// Largest `max|rho_BC(t) - rho_BC(t_f)| / (t - t_f)` over samples after `t_f`.
    pub post_t_f_drift: f64,
}

impl Trajectory {
    pub fn outcomes(&self) -> Vec<Outcome> {
        self.readouts.outcomes()
    }

    /// 1-based index of the first `0` readout.
    pub fn first_zero_index(&self) -> Option<usize> {
        self.readouts
            .iter()
            .find(|r| r.outcome == Outcome::Zero)
            .map(|r| r.index)
    }

    pub fn final_fidelity(&self) -> f64 {
        self.final_overlap.max(0.0).sqrt()
    }

    pub fn final_concurrence(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.concurrence)
    }

    /// Bell state predicted from the readouts alone.
    pub fn expected_label(&self) -> BellLabel {
        expected_label(self.config.initial, &self.outcomes())
    }

    /// The last `n` readouts agree.
    pub fn readouts_stable(&self, n: usize) -> bool {
        let outcomes = self.outcomes();
        outcomes.len() >= n
            && outcomes[outcomes.len() - n..]
                .windows(2)
                .all(|w| w[0] == w[1])
    }
}

/// Measurement times: every `tau`, switching to `zeno_tau` after a Zeno
/// trigger, always landing exactly on `t_f` and on the end of the run.
struct Schedule {
    base: f64,
    spacing: f64,
    count: usize,
    t_f: f64,
    t_end: f64,
}

impl Schedule {
    fn next_after(&self, t: f64) -> Option<f64> {
        if t >= self.t_end - TIME_EPS {
            return None;
        }
        let mut next = self.base + (self.count + 1) as f64 * self.spacing;
        if t < self.t_f - TIME_EPS && next > self.t_f - TIME_EPS {
            next = self.t_f;
        }
        if next > self.t_end - TIME_EPS {
            next = self.t_end;
        }
        Some(next)
    }

    fn advance(&mut self, t: f64) {
        if (t - self.t_f).abs() <= TIME_EPS {
            self.rebase(t, self.spacing);
        } else {
            self.count += 1;
        }
    }

    fn rebase(&mut self, t: f64, spacing: f64) {
        self.base = t;
        self.spacing = spacing;
        self.count = 0;
    }
}

fn snapshot(
    t: f64,
    state: &DensityMatrix,
    control: &ControlState,
    readout: Option<Outcome>,
) -> Result<Snapshot> {
    let rho_bc = partial_trace_ancilla(state)?;
    let concurrence = concurrence(&rho_bc)?;
    Ok(Snapshot {
        t,
        u_h: control.u_h(t),
        u_j: control.u_j,
        readout,
        concurrence,
        rho_bc,
    })
}

/// One selective realization of the protocol.
///
/// Readouts happen at `n tau`. The first readout that differs from the
/// initial ancilla value (a `0` for the default `|111>` start) sets `t_star`
/// and activates the feedback. The coupling is switched off right after the
/// measurement at `t_f`; evolution and measurements continue until
/// `t_f + post_t_f_extension`.
pub fn run_trajectory(cfg: &RunConfig, seed: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let params = cfg.params();
    let prop = cfg.propagator();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trigger = sector_roles(cfg.initial).ancilla.flipped();

    let mut control = ControlState {
        u_j: 1.0,
        feedback_mode: cfg.feedback_mode,
        t_star: None,
        t_f: cfg.t_f,
        continuous_ramp: cfg.continuous_ramp,
    };
    let t_end = cfg.t_f + cfg.post_t_f_extension;
    let mut schedule = Schedule {
        base: 0.0,
        spacing: cfg.tau,
        count: 0,
        t_f: cfg.t_f,
        t_end,
    };

    let mut state = cfg.initial_state();
    let mut t = 0.0;
    let mut samples = vec![snapshot(0.0, &state, &control, None)?];
    let mut readouts = ReadoutSequence::default();
    let mut rho_bc_at_t_f = None;

    while let Some(next) = schedule.next_after(t) {
        let mut t_prev = t;
        for j in 1..SAMPLES_PER_INTERVAL {
            let tj = t + (next - t) * j as f64 / SAMPLES_PER_INTERVAL as f64;
            state = evolve_density(&state, t_prev, tj, &params, &control, &prop)?;
            samples.push(snapshot(tj, &state, &control, None)?);
            t_prev = tj;
        }
        state = evolve_density(&state, t_prev, next, &params, &control, &prop)?;

        let draw: f64 = rng.gen();
        let measured = measure_selective(&state, draw)?;
        state = measured.state;
        readouts.push(MeasurementRecord {
            index: readouts.len() + 1,
            time: next,
            outcome: measured.outcome,
            probability: measured.probability,
        });

        schedule.advance(next);
        if measured.outcome == trigger
            && control.t_star.is_none()
            && cfg.feedback_mode != FeedbackMode::None
        {
            control.t_star = Some(next);
            if cfg.feedback_mode == FeedbackMode::Zeno {
                schedule.rebase(next, cfg.zeno_tau);
            }
        }
        let at_t_f = (next - cfg.t_f).abs() <= TIME_EPS;
        if at_t_f {
            control.u_j = 0.0;
        }
        let snap = snapshot(next, &state, &control, Some(measured.outcome))?;
        if at_t_f {
            rho_bc_at_t_f = Some(snap.rho_bc.clone());
        }
        samples.push(snap);
        t = next;
    }

    let rho_bc_at_t_f = match rho_bc_at_t_f {
        Some(rho) => rho,
        None => unreachable!("the schedule always lands on t_f"),
    };
    let post_t_f_drift = samples
        .iter()
        .filter(|s| s.t > cfg.t_f + TIME_EPS)
        .map(|s| s.rho_bc.max_abs_diff(&rho_bc_at_t_f) / (s.t - cfg.t_f))
        .fold(0.0, f64::max);

    let last = samples.last().expect("initial sample");
    let class = classify_final(&last.rho_bc);
    let fidelity_to_final = samples
        .iter()
        .map(|s| bell_fidelity(&s.rho_bc, class.label))
        .collect::<Result<Vec<_>>>()?;

    Ok(Trajectory {
        config: cfg.clone(),
        seed,
        readouts,
        samples,
        fidelity_to_final,
        final_label: class.label,
        final_overlap: class.overlap,
        degenerate: class.degenerate,
        t_star: control.t_star,
        rho_bc_at_t_f,
        final_state: state,
        post_t_f_drift,
    })
}

/// Per-trajectory record kept by an ensemble run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub seed: u64,
    pub final_label: BellLabel,
    pub n_measurements: usize,
    pub first_zero_index: Option<usize>,
    pub final_fidelity: f64,
    pub final_concurrence: f64,
    pub readouts: Vec<Outcome>,
    pub t_star: Option<f64>,
    /// Fidelity at `t_f` to the Bell state predicted from the readouts.
    pub fidelity_to_expected_at_t_f: f64,
    pub concurrence_at_t_f: f64,
    pub post_t_f_drift: f64,
}

impl TrajectorySummary {
    pub fn from_trajectory(index: usize, traj: &Trajectory) -> Result<Self> {
        Ok(Self {
            index,
            seed: traj.seed,
            final_label: traj.final_label,
            n_measurements: traj.readouts.len(),
            first_zero_index: traj.first_zero_index(),
            final_fidelity: traj.final_fidelity(),
            final_concurrence: traj.final_concurrence(),
            readouts: traj.outcomes(),
            t_star: traj.t_star,
            fidelity_to_expected_at_t_f: bell_fidelity(&traj.rho_bc_at_t_f, traj.expected_label())?,
            concurrence_at_t_f: concurrence(&traj.rho_bc_at_t_f)?,
            post_t_f_drift: traj.post_t_f_drift,
        })
    }

    pub fn all_same_as_initial(&self, initial: BasisLabel) -> bool {
        let ancilla = sector_roles(initial).ancilla;
        self.readouts.iter().all(|&r| r == ancilla)
    }

    pub fn readouts_stable(&self, n: usize) -> bool {
        self.readouts.len() >= n
            && self.readouts[self.readouts.len() - n..]
                .windows(2)
                .all(|w| w[0] == w[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    /// Counts in `BellLabel::ALL` order.
    pub counts: [usize; 4],
    pub trajectories: Vec<TrajectorySummary>,
}

impl EnsembleStats {
    pub fn count(&self, label: BellLabel) -> usize {
        self.counts[label.index()]
    }

    pub fn frequency(&self, label: BellLabel) -> f64 {
        self.count(label) as f64 / self.trajectories.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs `cfg.n_traj` trajectories, trajectory `k` seeded with
/// `mix_seed(cfg.master_seed, k)`.
pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleStats> {
    run_ensemble_with(cfg, Execution::Parallel)
}

pub fn run_ensemble_with(cfg: &RunConfig, execution: Execution) -> Result<EnsembleStats> {
    cfg.validate()?;
    let one = |k: usize| -> Result<TrajectorySummary> {
        let traj = run_trajectory(cfg, mix_seed(cfg.master_seed, k as u64))?;
        TrajectorySummary::from_trajectory(k, &traj)
    };
    let trajectories: Vec<TrajectorySummary> = match execution {
        Execution::Serial => (0..cfg.n_traj).map(one).collect::<Result<_>>()?,
        Execution::Parallel => (0..cfg.n_traj)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?,
    };
    let mut counts = [0usize; 4];
    for t in &trajectories {
        counts[t.final_label.index()] += 1;
    }
    Ok(EnsembleStats {
        counts,
        trajectories,
    })
}

#[derive(Clone, Debug)]
pub struct NonselectivePoint {
    pub t: f64,
    /// State right after the measurement at `t` (the initial state at `t = 0`).
    pub state: DensityMatrix,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct NonselectiveRun {
    pub tau: f64,
    pub asymptotic: DensityMatrix,
    pub points: Vec<NonselectivePoint>,
}

impl NonselectiveRun {
    pub fn final_distance(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.distance)
    }

    /// First measurement instant with `D < threshold`.
    pub fn first_passage(&self, threshold: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.distance < threshold)
            .map(|p| p.t)
    }

    /// `D(rho(t), rho_inf)` at an arbitrary time, propagating from the last
    /// measurement at or before `t`.
    pub fn distance_at(&self, t: f64, params: &ModelParams) -> Result<f64> {
        let point = self
            .points
            .iter()
            .rev()
            .find(|p| p.t <= t + TIME_EPS)
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} precedes the run")))?;
        let dt = t - point.t;
        if dt <= TIME_EPS {
            return Ok(point.distance);
        }
        let u = exp_hermitian(&hamiltonian_with(params, 1.0, 0.0), dt)?;
        trace_distance(&apply_unitary(&u, &point.state)?, &self.asymptotic)
    }
}

/// Field-free evolution with nonselective measurements every `cfg.tau` up to
/// `horizon`, tracking the distance to the tabulated asymptotic state.
pub fn run_nonselective(cfg: &RunConfig, horizon: f64) -> Result<NonselectiveRun> {
    if cfg.feedback_mode != FeedbackMode::None {
        return Err(Error::InvalidParameter(
            "nonselective runs have no feedback; set feedback to none".into(),
        ));
    }
    positive("tau", cfg.tau)?;
    let params = cfg.params();
    let u = exp_hermitian(&hamiltonian_with(&params, 1.0, 0.0), cfg.tau)?;
    let asymptotic = asymptotic_state(cfg.initial);
    let mut state = cfg.initial_state();
    let mut points = vec![NonselectivePoint {
        t: 0.0,
        distance: trace_distance(&state, &asymptotic)?,
        state: state.clone(),
    }];
    let n_steps = (horizon / cfg.tau + TIME_EPS).floor() as usize;
    for n in 1..=n_steps {
        state = measure_nonselective(&apply_unitary(&u, &state)?);
        points.push(NonselectivePoint {
            t: n as f64 * cfg.tau,
            distance: trace_distance(&state, &asymptotic)?,
            state: state.clone(),
        });
    }
    Ok(NonselectiveRun {
        tau: cfg.tau,
        asymptotic,
        points,
    })
}

/// `min, min + step, ..., max` with values rounded to 12 decimals.
pub fn uniform_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(Error::InvalidParameter(format!(
            "grid needs min <= max and step > 0, got min={min} max={max} step={step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub taus: Vec<f64>,
    pub times: Vec<f64>,
    /// `distances[i][j]` is `D` at `times[j]` for `taus[i]`.
    pub distances: Vec<Vec<f64>>,
    pub first_passage: Vec<Option<f64>>,
    pub threshold: f64,
    pub tau_star: Option<f64>,
}

/// Runs [`run_nonselective`] for every `tau` and locates the one reaching
/// `D < threshold` first; ties go to the smaller `tau`.
pub fn sweep_tau(
    taus: &[f64],
    times: &[f64],
    horizon: f64,
    threshold: f64,
    initial: BasisLabel,
) -> Result<SweepResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if taus.is_empty() {
        return Err(Error::InvalidParameter("empty tau grid".into()));
    }
    let params = ModelParams::with_field(0.0)?;
    let rows: Vec<(Vec<f64>, Option<f64>)> = taus
        .par_iter()
        .map(|&tau| {
            let cfg = RunConfig {
                tau,
                feedback_mode: FeedbackMode::None,
                initial,
                h_z: 0.0,
                ..RunConfig::default()
            };
            let run = run_nonselective(&cfg, horizon)?;
            let row = times
                .iter()
                .map(|&t| run.distance_at(t, &params))
                .collect::<Result<Vec<_>>>()?;
            Ok((row, run.first_passage(threshold)))
        })
        .collect::<Result<_>>()?;

    let mut tau_star: Option<(f64, f64)> = None;
    for (&tau, (_, passage)) in taus.iter().zip(&rows) {
        if let Some(time) = *passage {
            let better = match tau_star {
                None => true,
                Some((best_time, best_tau)) => {
                    time < best_time - TIME_EPS
                        || ((time - best_time).abs() <= TIME_EPS && tau < best_tau)
                }
            };
            if better {
                tau_star = Some((time, tau));
            }
        }
    }
    let (distances, first_passage) = rows.into_iter().unzip();
    Ok(SweepResult {
        taus: taus.to_vec(),
        times: times.to_vec(),
        distances,
        first_passage,
        threshold,
        tau_star: tau_star.map(|(_, tau)| tau),
    })
}
