//! Subcommand implementations. Every command computes everything first and
//! writes its files afterwards.

use std::fs;
use std::path::{Path, PathBuf};

use ancilla_bell::analytic::{
    asymptotic_mixture, asymptotic_state, asymptotic_state_numeric, AsymptoticComponent,
};
use ancilla_bell::metrics::trace_distance;
use ancilla_bell::model::{BasisLabel, BellLabel};
use ancilla_bell::protocol::{mix_seed, run_ensemble, run_trajectory, sweep_tau, uniform_grid};
use ancilla_bell::qcore::{DensityMatrix, PureState};
use serde::Serialize;

use crate::checks::{render_table, run_checks};
use crate::config::Settings;
use crate::error::CliError;
use crate::format::{CsvWriter, Field};
use crate::schema;

/// Default spacing of the time axis in `sweep.csv`.
pub const DEFAULT_TIME_STEP: f64 = 0.1;

/// What a command produced. `failure` is set when files were written but
/// the run must still end with a nonzero status.
#[derive(Debug)]
pub struct Report {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub failure: Option<CliError>,
}

fn write_outputs(dir: &Path, outputs: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    outputs
        .iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct FirstPassage {
    tau: f64,
    t: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a Settings,
    time_step: f64,
    horizon: f64,
    threshold: f64,
    tau_star: Option<f64>,
    first_passage: Vec<FirstPassage>,
}

/// Field-free nonselective runs over the tau grid up to `t_f`.
pub fn cmd_sweep(settings: &Settings, time_step: Option<f64>) -> Result<Report, CliError> {
    let time_step = time_step.unwrap_or(DEFAULT_TIME_STEP);
    let horizon = settings.run.t_f;
    let taus = settings.tau_grid.values()?;
    let times = uniform_grid(0.0, horizon, time_step)
        .map_err(|e| CliError::Config(format!("time_step: {e}")))?;
    let sweep = sweep_tau(
        &taus,
        &times,
        horizon,
        settings.threshold_d,
        settings.run.initial,
    )
    .map_err(CliError::numerical)?;

    let mut csv = CsvWriter::new(
        &format!("{} time_step={time_step}", settings.header()),
        schema::SWEEP_COLUMNS,
    );
    for (tau, row) in sweep.taus.iter().zip(&sweep.distances) {
        for (t, d) in sweep.times.iter().zip(row) {
            csv.row(&[Field::Num(*tau), Field::Num(*t), Field::Num(*d)]);
        }
    }
    let summary = SweepSummary {
        config: settings,
        time_step,
        horizon,
        threshold: sweep.threshold,
        tau_star: sweep.tau_star,
        first_passage: sweep
            .taus
            .iter()
            .zip(&sweep.first_passage)
            .map(|(&tau, &t)| FirstPassage { tau, t })
            .collect(),
    };
    let files = write_outputs(
        &settings.output_dir,
        &[
            (schema::SWEEP_CSV, csv.finish()),
            (schema::SWEEP_SUMMARY, to_json(&summary)),
        ],
    )?;
    let text = match sweep.tau_star {
        Some(tau) => format!(
            "tau_star = {tau} (first D < {} over {} tau values)",
            sweep.threshold,
            taus.len()
        ),
        None => format!(
            "no tau reached D < {} within t = {horizon}; tau_star absent",
            sweep.threshold
        ),
    };
    Ok(Report {
        summary: text,
        files,
        failure: None,
    })
}

#[derive(Serialize)]
struct ReadoutsJson<'a> {
    config: &'a Settings,
    seed: u64,
    readouts: Vec<u8>,
    times: Vec<f64>,
    t_star: Option<f64>,
    final_label: BellLabel,
    expected_label: BellLabel,
    final_fidelity: f64,
    degenerate: bool,
}

/// Seed of a single trajectory: `--seed` when given, otherwise the seed of
/// ensemble member `index`.
pub fn trajectory_seed(settings: &Settings, seed: Option<u64>, index: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| mix_seed(settings.run.master_seed, index.unwrap_or(0)))
}

pub fn cmd_trajectory(settings: &Settings, seed: u64) -> Result<Report, CliError> {
    let traj = run_trajectory(&settings.run, seed).map_err(CliError::numerical)?;

    let mut csv = CsvWriter::new(
        &format!("{} seed={seed}", settings.header()),
        schema::TRAJECTORY_COLUMNS,
    );
    for (s, fid) in traj.samples.iter().zip(&traj.fidelity_to_final) {
        let coherence = s.phi_coherence();
        let readout = s.readout.map(|r| r.bit().to_string());
        csv.row(&[
            Field::Num(s.t),
            Field::Num(s.bell_population(BellLabel::PhiMinus)),
            Field::Num(s.bell_population(BellLabel::PhiPlus)),
            Field::Num(s.bell_population(BellLabel::PsiPlus)),
            Field::Num(s.bell_population(BellLabel::PsiMinus)),
            Field::Num(coherence.re),
            Field::Num(coherence.im),
            Field::Num(s.concurrence),
            Field::Num(*fid),
            Field::Num(s.u_h),
            Field::Num(s.u_j),
            readout.as_deref().map_or(Field::Empty, Field::Text),
        ]);
    }
    let json = ReadoutsJson {
        config: settings,
        seed,
        readouts: traj.outcomes().iter().map(|o| o.bit()).collect(),
        times: traj.readouts.iter().map(|r| r.time).collect(),
        t_star: traj.t_star,
        final_label: traj.final_label,
        expected_label: traj.expected_label(),
        final_fidelity: traj.final_fidelity(),
        degenerate: traj.degenerate,
    };
    let files = write_outputs(
        &settings.output_dir,
        &[
            (schema::TRAJECTORY_CSV, csv.finish()),
            (schema::READOUTS_JSON, to_json(&json)),
        ],
    )?;
    let bits: String = json.readouts.iter().map(|b| char::from(b'0' + b)).collect();
    Ok(Report {
        summary: format!(
            "seed {seed}: readouts {bits}, final {} (fidelity {:.6})",
            traj.final_label,
            traj.final_fidelity()
        ),
        files,
        failure: None,
    })
}

pub fn cmd_ensemble(settings: &Settings) -> Result<Report, CliError> {
    let stats = run_ensemble(&settings.run).map_err(CliError::numerical)?;
    let mut csv = CsvWriter::new(&settings.header(), schema::ENSEMBLE_COLUMNS);
    for t in &stats.trajectories {
        csv.row(&[
            Field::UInt(t.seed),
            Field::Text(t.final_label.as_str()),
            Field::UInt(t.n_measurements as u64),
            Field::Int(t.first_zero_index.map_or(-1, |i| i as i64)),
            Field::Num(t.final_fidelity),
            Field::Num(t.final_concurrence),
        ]);
    }
    let files = write_outputs(
        &settings.output_dir,
        &[(schema::ENSEMBLE_CSV, csv.finish())],
    )?;
    let mut summary = format!("{} trajectories", stats.trajectories.len());
    for label in BellLabel::ALL {
        summary.push_str(&format!(
            "\n  {:<9} {:>6}  {:.4}",
            label.as_str(),
            stats.count(label),
            stats.frequency(label)
        ));
    }
    Ok(Report {
        summary,
        files,
        failure: None,
    })
}

#[derive(Serialize)]
struct AsymptoticEntry {
    initial: BasisLabel,
    components: Vec<AsymptoticComponent>,
    converged: bool,
    iterations: Option<usize>,
    residual: Option<f64>,
    trace_distance: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct AsymptoticJson<'a> {
    config: &'a Settings,
    tau: f64,
    tolerance: f64,
    max_iterations: usize,
    max_trace_distance: Option<f64>,
    states: Vec<AsymptoticEntry>,
}

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Tabulated against iterated fixed points for all eight basis starts.
pub fn cmd_asymptotic(settings: &Settings) -> Result<Report, CliError> {
    let tau = settings.run.tau;
    let params = ancilla_bell::model::ModelParams::with_field(0.0).map_err(CliError::numerical)?;
    let mut states = Vec::new();
    for label in BasisLabel::all() {
        let rho0 = DensityMatrix::from_pure(&PureState::basis(8, label.index()))
            .map_err(CliError::numerical)?;
        let mixture = asymptotic_mixture(label);
        let entry = match asymptotic_state_numeric(
            &rho0,
            tau,
            &params,
            FIXED_POINT_TOL,
            FIXED_POINT_MAX_ITER,
        ) {
            Ok(fixed) => AsymptoticEntry {
                initial: label,
                components: mixture.components,
                converged: true,
                iterations: Some(fixed.iterations),
                residual: Some(fixed.residual),
                trace_distance: Some(
                    trace_distance(&fixed.state, &asymptotic_state(label))
                        .map_err(CliError::numerical)?,
                ),
                error: None,
            },
            Err(e) => AsymptoticEntry {
                initial: label,
                components: mixture.components,
                converged: false,
                iterations: None,
                residual: match e {
                    ancilla_bell::Error::NotConverged { residual, .. } => Some(residual),
                    _ => None,
                },
                trace_distance: None,
                error: Some(e.to_string()),
            },
        };
        states.push(entry);
    }
    let failed: Vec<String> = states
        .iter()
        .filter(|s| !s.converged)
        .map(|s| s.initial.to_string())
        .collect();
    let max_trace_distance = if failed.is_empty() {
        states
            .iter()
            .filter_map(|s| s.trace_distance)
            .reduce(f64::max)
    } else {
        None
    };
    let json = AsymptoticJson {
        config: settings,
        tau,
        tolerance: FIXED_POINT_TOL,
        max_iterations: FIXED_POINT_MAX_ITER,
        max_trace_distance,
        states,
    };
    let files = write_outputs(
        &settings.output_dir,
        &[(schema::ASYMPTOTIC_JSON, to_json(&json))],
    )?;
    let (summary, failure) = if failed.is_empty() {
        (
            format!(
                "all 8 fixed points converged; max trace distance to the tabulated states {:.3e}",
                max_trace_distance.unwrap_or(0.0)
            ),
            None,
        )
    } else {
        let msg = format!(
            "fixed point not reached at tau = {tau} for {}",
            failed.join(", ")
        );
        (msg.clone(), Some(CliError::Numerical(msg)))
    };
    Ok(Report {
        summary,
        files,
        failure,
    })
}

pub fn cmd_analytic_check(settings: &Settings) -> Result<Report, CliError> {
    let tau = settings.run.tau;
    let rows = run_checks(tau).map_err(CliError::numerical)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    Ok(Report {
        summary: render_table(tau, &rows).trim_end().to_string(),
        files: Vec::new(),
        failure: (failed > 0)
            .then(|| CliError::Numerical(format!("{failed} closed-form checks failed"))),
    })
}
