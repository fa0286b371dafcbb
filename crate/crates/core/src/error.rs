use thiserror::Error;

use crate::metrics::MetricKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max |m - m^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("density matrix violates {invariant} (deviation {deviation:e})")]
    InvalidDensity {
        invariant: &'static str,
        deviation: f64,
    },

    #[error("{kind} value {value} lies outside [0, 1] beyond tolerance")]
    MetricRange { kind: MetricKind, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outcome {outcome} has zero probability")]
    ImpossibleOutcome { outcome: u8 },

    #[error("inter-measurement time {tau} is within 1e-3 of a multiple of pi/2")]
    PathologicalTau { tau: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}
