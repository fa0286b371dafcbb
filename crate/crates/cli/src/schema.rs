//! File names and CSV column lists. External consumers bind to the column
//! names, so these lists are the contract.

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SUMMARY: &str = "summary.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const READOUTS_JSON: &str = "readouts.json";
pub const ENSEMBLE_CSV: &str = "ensemble.csv";
pub const ASYMPTOTIC_JSON: &str = "asymptotic.json";

pub const SWEEP_COLUMNS: &[&str] = &["tau", "t", "trace_distance"];

pub const TRAJECTORY_COLUMNS: &[&str] = &[
    "t",
    "p_phi_minus",
    "p_phi_plus",
    "p_psi_plus",
    "p_psi_minus",
    "coh_phi_re",
    "coh_phi_im",
    "concurrence",
    "fidelity_to_final",
    "u_h",
    "u_j",
    "readout",
];

pub const ENSEMBLE_COLUMNS: &[&str] = &[
    "seed",
    "final_label",
    "n_measurements",
    "first_zero_index",
    "final_fidelity",
    "final_concurrence",
];
