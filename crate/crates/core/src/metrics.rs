//! Distance and entanglement measures.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{pauli_y, BellLabel};
use crate::qcore::{
    hermitian_eig, hermitian_eigenvalues, kron, ComplexMatrix, DensityMatrix, PSD_TOL,
};

/// Largest excursion outside `[0, 1]` that is treated as round-off.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    TraceDistance,
    Concurrence,
    Fidelity,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::TraceDistance => "trace distance",
            MetricKind::Concurrence => "concurrence",
            MetricKind::Fidelity => "fidelity",
        })
    }
}

fn clamp_unit(value: f64, kind: MetricKind) -> Result<f64> {
    if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&value) {
        return Err(Error::MetricRange { kind, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `D = 1/2 sum_i |lambda_i|` over the eigenvalues of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "trace distance between {}x{} and {}x{} states",
            rho.dim(),
            rho.dim(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    let d = 0.5
        * hermitian_eigenvalues(&diff)?
            .iter()
            .map(|x| x.abs())
            .sum::<f64>();
    clamp_unit(d, MetricKind::TraceDistance)
}

// Eigenvalues below this are round-off; their square roots would otherwise
// add errors of order 1e-8.
const ROUNDOFF_FLOOR: f64 = 1e-14;

fn floored_sqrt(x: f64) -> f64 {
    if x > ROUNDOFF_FLOOR {
        x.sqrt()
    } else {
        0.0
    }
}

/// Square root of a PSD Hermitian matrix; eigenvalues down to `-PSD_TOL` are clipped to 0.
fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    check_psd(&eig.values)?;
    Ok(eig.map_values(|x| floored_sqrt(x).into()))
}

fn check_psd(values: &[f64]) -> Result<()> {
    match values.iter().copied().fold(f64::INFINITY, f64::min) {
        min if min < -PSD_TOL => Err(Error::InvalidDensity {
            invariant: "positivity",
            deviation: -min,
        }),
        _ => Ok(()),
    }
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)` with `l_i` the
/// descending square roots of the eigenvalues of `rho (sy x sy) rho* (sy x sy)`.
///
/// Those eigenvalues are computed from the Hermitian matrix
/// `sqrt(rho) rho~ sqrt(rho)`, which has the same spectrum.
pub fn concurrence(rho_bc: &DensityMatrix) -> Result<f64> {
    if rho_bc.dim() != 4 {
        return Err(Error::Dimension(format!(
            "concurrence needs a 4x4 state, got {}x{}",
            rho_bc.dim(),
            rho_bc.dim()
        )));
    }
    let yy = kron(&pauli_y(), &pauli_y())?;
    let tilde = &(&yy * &rho_bc.matrix().conjugate()) * &yy;
    let root = psd_sqrt(rho_bc.matrix())?;
    let r = hermitian_part(&(&(&root * &tilde) * &root));
    let values = hermitian_eigenvalues(&r)?;
    check_psd(&values)?;
    let l: Vec<f64> = values.iter().map(|&x| floored_sqrt(x)).collect();
    let c = (l[0] - l[1] - l[2] - l[3]).max(0.0);
    clamp_unit(c, MetricKind::Concurrence)
}

/// Uhlmann fidelity `Tr sqrt(sqrt(rho) sigma sqrt(rho))`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "fidelity between {}x{} and {}x{} states",
            rho.dim(),
            rho.dim(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = hermitian_part(&(&(&root * sigma.matrix()) * &root));
    let values = hermitian_eigenvalues(&inner)?;
    check_psd(&values)?;
    let f = values.iter().map(|&x| floored_sqrt(x)).sum::<f64>();
    clamp_unit(f, MetricKind::Fidelity)
}

/// Fidelity to a pure Bell target, `sqrt(<bell|rho|bell>)`.
pub fn bell_fidelity(rho_bc: &DensityMatrix, label: BellLabel) -> Result<f64> {
    let overlap = rho_bc.expectation(&crate::model::bell_state(label));
    clamp_unit(overlap, MetricKind::Fidelity).map(f64::sqrt)
}
