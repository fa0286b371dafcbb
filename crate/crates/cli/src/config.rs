//! Config file parsing, flag overrides and the resolved settings.
//!
//! The config file is TOML with flat keys plus a `[tau_grid]` table:
//!
//! ```toml
//! tau = 0.5
//! t_f = 10.0
//! h_z = 50.0
//! initial = "111"
//! feedback = "ramp"
//! zeno_tau = 0.02
//! substep = 0.001
//! master_seed = 7
//! n_traj = 2000
//! threshold_d = 0.05
//! output_dir = "out"
//!
//! [tau_grid]
//! min = 0.05
//! max = 1.5
//! step = 0.01
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ancilla_bell::model::{BasisLabel, FeedbackMode};
use ancilla_bell::protocol::{uniform_grid, RunConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_THRESHOLD_D: f64 = 0.05;
pub const DEFAULT_TAU_GRID: TauGrid = TauGrid {
    min: 0.05,
    max: 1.5,
    step: 0.01,
};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tau: Option<f64>,
    pub t_f: Option<f64>,
    pub h_z: Option<f64>,
    pub initial: Option<String>,
    pub feedback: Option<String>,
    pub zeno_tau: Option<f64>,
    pub substep: Option<f64>,
    pub master_seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub threshold_d: Option<f64>,
    pub tau_grid: Option<TauGridFile>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGridFile {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub step: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl TauGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        uniform_grid(self.min, self.max, self.step)
            .map_err(|e| CliError::Config(format!("tau_grid: {e}")))
    }
}

/// Flags shared by every subcommand; each one overrides the matching
/// config-file key.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML config file
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Time between measurements
    #[arg(long)]
    pub tau: Option<f64>,
    /// Interaction switch-off time
    #[arg(long)]
    pub t_f: Option<f64>,
    /// Feedback field strength
    #[arg(long)]
    pub h_z: Option<f64>,
    /// Initial basis state as three bits n m l, e.g. 111
    #[arg(long)]
    pub initial: Option<String>,
    /// none, ramp or zeno
    #[arg(long)]
    pub feedback: Option<String>,
    /// Measurement interval after a zeno trigger
    #[arg(long)]
    pub zeno_tau: Option<f64>,
    /// Propagation substep while the field ramps
    #[arg(long)]
    pub substep: Option<f64>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    /// Trace-distance threshold that defines the optimal tau
    #[arg(long)]
    pub threshold_d: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub tau_step: Option<f64>,
    /// Simulated time after t_f
    #[arg(long)]
    pub post_t_f_extension: Option<f64>,
    /// Use the ramp that rises over the whole interval up to t_f
    #[arg(long)]
    pub continuous_ramp: bool,
    #[arg(long, short)]
    pub output_dir: Option<PathBuf>,
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    #[serde(flatten)]
    pub run: RunConfig,
    pub threshold_d: f64,
    pub tau_grid: TauGrid,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Self::merge(&file, args)
    }

    pub fn merge(file: &ConfigFile, args: &CommonArgs) -> Result<Self, CliError> {
        let defaults = RunConfig::default();
        let grid_file = file.tau_grid.clone().unwrap_or_default();

        let initial = match args.initial.as_ref().or(file.initial.as_ref()) {
            Some(text) => text
                .parse::<BasisLabel>()
                .map_err(|e| CliError::Config(format!("initial: {e}")))?,
            None => defaults.initial,
        };
        let feedback_mode = match args.feedback.as_ref().or(file.feedback.as_ref()) {
            Some(text) => text
                .parse::<FeedbackMode>()
                .map_err(|e| CliError::Config(format!("feedback: {e}")))?,
            None => defaults.feedback_mode,
        };

        let run = RunConfig {
            tau: args.tau.or(file.tau).unwrap_or(defaults.tau),
            t_f: args.t_f.or(file.t_f).unwrap_or(defaults.t_f),
            h_z: args.h_z.or(file.h_z).unwrap_or(defaults.h_z),
            initial,
            feedback_mode,
            zeno_tau: args.zeno_tau.or(file.zeno_tau).unwrap_or(defaults.zeno_tau),
            master_seed: args
                .master_seed
                .or(file.master_seed)
                .unwrap_or(defaults.master_seed),
            n_traj: args.n_traj.or(file.n_traj).unwrap_or(defaults.n_traj),
            substep: args.substep.or(file.substep).unwrap_or(defaults.substep),
            post_t_f_extension: args
                .post_t_f_extension
                .unwrap_or(defaults.post_t_f_extension),
            continuous_ramp: args.continuous_ramp,
        };
        run.validate_parameters()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let threshold_d = args
            .threshold_d
            .or(file.threshold_d)
            .unwrap_or(DEFAULT_THRESHOLD_D);
        if !(threshold_d > 0.0 && threshold_d < 1.0) {
            return Err(CliError::Config(format!(
                "threshold_d must lie in (0, 1), got {threshold_d}"
            )));
        }
        let tau_grid = TauGrid {
            min: args
                .tau_min
                .or(grid_file.min)
                .unwrap_or(DEFAULT_TAU_GRID.min),
            max: args
                .tau_max
                .or(grid_file.max)
                .unwrap_or(DEFAULT_TAU_GRID.max),
            step: args
                .tau_step
                .or(grid_file.step)
                .unwrap_or(DEFAULT_TAU_GRID.step),
        };
        tau_grid.values()?;
        if tau_grid.min <= 0.0 {
            return Err(CliError::Config(format!(
                "tau_grid.min must be positive, got {}",
                tau_grid.min
            )));
        }

        let output_dir = args
            .output_dir
            .clone()
            .or_else(|| file.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));

        Ok(Self {
            run,
            threshold_d,
            tau_grid,
            output_dir,
        })
    }

    /// Checks needed before selective runs, which measure on the `tau` grid
    /// up to `t_f`.
    pub fn require_schedule(&self) -> Result<(), CliError> {
        self.run
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// One `key=value` line per setting, for output headers. The output
    /// directory is left out so that reruns elsewhere stay byte-identical.
    pub fn header(&self) -> String {
        let r = &self.run;
        [
            format!("tau={}", r.tau),
            format!("t_f={}", r.t_f),
            format!("h_z={}", r.h_z),
            format!("initial={}", r.initial),
            format!("feedback={}", r.feedback_mode),
            format!("zeno_tau={}", r.zeno_tau),
            format!("substep={}", r.substep),
            format!("master_seed={}", r.master_seed),
            format!("n_traj={}", r.n_traj),
            format!("threshold_d={}", self.threshold_d),
            format!(
                "tau_grid={}:{}:{}",
                self.tau_grid.min, self.tau_grid.max, self.tau_grid.step
            ),
            format!("post_t_f_extension={}", r.post_t_f_extension),
            format!("continuous_ramp={}", r.continuous_ramp),
        ]
        .join(" ")
    }
}
