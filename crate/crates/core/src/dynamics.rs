//! Unitary propagation between measurements.
//!
//! Where the controls are constant the propagator is the exact exponential
//! `exp(-i H dt)` from a Hermitian eigendecomposition. While the feedback
//! ramp varies, the interval is cut into substeps, each propagated exactly
//! under the fourth-order Magnus Hamiltonian built from the two Gauss points
//! `H1, H2`:
//!
//! `H_eff = (H1 + H2) / 2 + i sqrt(3) dt / 12 [H1, H2]`.

use crate::error::{Error, Result};
use crate::model::{
    ancilla_field_operator, coupling_operator, hamiltonian, ControlState, ModelParams,
};
use crate::qcore::{hermitian_eig, validate_density, ComplexMatrix, DensityMatrix, C64, TRACE_TOL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub substep: f64,
    /// Use one exact exponential on every stretch with constant controls.
    /// When off, every stretch is substepped.
    pub piecewise_exact: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            substep: 1e-3,
            piecewise_exact: true,
        }
    }
}

impl PropagatorConfig {
    pub fn with_substep(substep: f64) -> Result<Self> {
        if !(substep > 0.0) || !substep.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "substep must be positive, got {substep}"
            )));
        }
        Ok(Self {
            substep,
            piecewise_exact: true,
        })
    }
}

/// `exp(-i H dt)` for Hermitian `H`.
pub fn exp_hermitian(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = hermitian_eig(h)?;
    Ok(eig.map_values(|lambda| C64::from_polar(1.0, -lambda * dt)))
}

// Times closer than this are the same instant.
const TIME_EPS: f64 = 1e-12;

/// Propagator `U(t1, t0)`.
pub fn step_unitary(
    t0: f64,
    t1: f64,
    params: &ModelParams,
    control: &ControlState,
    cfg: &PropagatorConfig,
) -> Result<ComplexMatrix> {
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!(
            "propagation needs t1 >= t0, got [{t0}, {t1}]"
        )));
    }
    let mut u = ComplexMatrix::identity(8);
    if t1 - t0 <= TIME_EPS {
        return Ok(u);
    }

    // Split at the ramp edges so each piece is either constant or varying.
    let mut cuts = vec![t0];
    let window = control.ramp_window();
    if let Some((start, end)) = window {
        for edge in [start, end] {
            if edge > t0 + TIME_EPS && edge < t1 - TIME_EPS {
                cuts.push(edge);
            }
        }
    }
    cuts.push(t1);

    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let mid = 0.5 * (a + b);
        let varying = window.is_some_and(|(start, end)| mid > start && mid < end);
        let piece_u = if varying || !cfg.piecewise_exact {
            substepped(a, b, params, control, cfg.substep)?
        } else {
            exp_hermitian(&hamiltonian(mid, params, control), b - a)?
        };
        u = piece_u * &u;
    }
    Ok(u)
}

fn substepped(
    a: f64,
    b: f64,
    params: &ModelParams,
    control: &ControlState,
    substep: f64,
) -> Result<ComplexMatrix> {
    let n = ((b - a) / substep - 1e-9).ceil().max(1.0) as usize;
    let dt = (b - a) / n as f64;
    let coupling = coupling_operator().scale_real(params.j_x * control.u_j);
    let field = ancilla_field_operator().scale_real(params.h_z);
    // [H1, H2] = (u_h1 - u_h2) [coupling, field] for H = coupling - u_h field
    let bracket = &(&coupling * &field) - &(&field * &coupling);
    let offset = 3f64.sqrt() / 6.0;
    let commutator_weight = 3f64.sqrt() * dt / 12.0;
    let mut u = ComplexMatrix::identity(8);
    for k in 0..n {
        let mid = a + (k as f64 + 0.5) * dt;
        let (u1, u2) = (
            control.u_h(mid - offset * dt),
            control.u_h(mid + offset * dt),
        );
        let h_eff = &(&coupling - &field.scale_real(0.5 * (u1 + u2)))
            + &bracket.scale(C64::new(0.0, commutator_weight * (u1 - u2)));
        u = exp_hermitian(&h_eff, dt)? * &u;
    }
    Ok(u)
}

/// `rho(t1) = U rho(t0) U^dagger`, re-validated.
pub fn evolve_density(
    rho: &DensityMatrix,
    t0: f64,
    t1: f64,
    params: &ModelParams,
    control: &ControlState,
    cfg: &PropagatorConfig,
) -> Result<DensityMatrix> {
    let u = step_unitary(t0, t1, params, control, cfg)?;
    apply_unitary(&u, rho)
}

pub fn apply_unitary(u: &ComplexMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    validate_density(u.conjugate_by(rho.matrix()), TRACE_TOL)
}
