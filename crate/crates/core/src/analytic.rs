//! Closed-form results for the field-free protocol, used as oracles for the
//! numerical path.
//!
//! With `u_h = 0` and `u_J = 1` the Hamiltonian couples only `|1_A, Phi+>`
//! and `|0_A, Psi+>` (and their ancilla-flipped partners) with strength
//! `2 J_x`. One interval `tau` therefore maps
//! `|1_A, Phi+> -> a |1_A, Phi+> + b |0_A, Psi+>` with `a = cos(2 tau)` and
//! `b = -i sin(2 tau)`, while `|i_A, Phi->` and `|i_A, Psi->` do not move.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::dynamics::{apply_unitary, step_unitary, PropagatorConfig};
use crate::error::{Error, Result};
use crate::measurement::measure_nonselective;
use crate::metrics::trace_distance;
use crate::model::{
    ancilla_bell_state, pauli_x, three_qubit, BasisLabel, BellLabel, ControlState, ModelParams,
    Outcome,
};
use crate::qcore::{validate_density, ComplexMatrix, DensityMatrix, PureState, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiCoefficients {
    pub a: C64,
    pub b: C64,
    pub tau: f64,
}

pub fn ab_coefficients(tau: f64) -> Result<RabiCoefficients> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tau must be non-negative, got {tau}"
        )));
    }
    let phase = 2.0 * tau;
    Ok(RabiCoefficients {
        a: C64::new(phase.cos(), 0.0),
        b: C64::new(0.0, -phase.sin()),
        tau,
    })
}

/// One term `weight |ancilla><ancilla| (x) |bell><bell|` of an asymptotic state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticComponent {
    pub ancilla: Outcome,
    pub bell: BellLabel,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticMixture {
    pub initial: BasisLabel,
    pub components: Vec<AsymptoticComponent>,
}

impl AsymptoticMixture {
    pub fn density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(8);
        for c in &self.components {
            m = &m
                + &ancilla_bell_state(c.ancilla, c.bell)
                    .projector()
                    .scale_real(c.weight);
        }
        validate_density(m, 1e-12).expect("weights sum to one")
    }
}

/// Bell-state roles for a computational-basis start `|n m l>`.
///
/// The targets start in an equal superposition of a stationary Bell state
/// (`Phi-` when `m == l`, `Psi-` otherwise) and a coupled one (`Phi+` or
/// `Psi+`), which oscillates into its partner with the ancilla flipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorRoles {
    pub ancilla: Outcome,
    pub stationary: BellLabel,
    /// Coupled Bell state sharing the initial ancilla value.
    pub coupled_same: BellLabel,
    /// Its partner, reached with the ancilla flipped.
    pub coupled_flipped: BellLabel,
}

pub fn sector_roles(initial: BasisLabel) -> SectorRoles {
    let ancilla = Outcome::from_bit(initial.n).expect("bit");
    if initial.m == initial.l {
        SectorRoles {
            ancilla,
            stationary: BellLabel::PhiMinus,
            coupled_same: BellLabel::PhiPlus,
            coupled_flipped: BellLabel::PsiPlus,
        }
    } else {
        SectorRoles {
            ancilla,
            stationary: BellLabel::PsiMinus,
            coupled_same: BellLabel::PsiPlus,
            coupled_flipped: BellLabel::PhiPlus,
        }
    }
}

/// Tabulated fixed point of the evolve-and-measure map for a basis start.
pub fn asymptotic_mixture(initial: BasisLabel) -> AsymptoticMixture {
    let roles = sector_roles(initial);
    AsymptoticMixture {
        initial,
        components: vec![
            AsymptoticComponent {
                ancilla: roles.ancilla,
                bell: roles.stationary,
                weight: 0.5,
            },
            AsymptoticComponent {
                ancilla: roles.ancilla,
                bell: roles.coupled_same,
                weight: 0.25,
            },
            AsymptoticComponent {
                ancilla: roles.ancilla.flipped(),
                bell: roles.coupled_flipped,
                weight: 0.25,
            },
        ],
    }
}

pub fn asymptotic_state(initial: BasisLabel) -> DensityMatrix {
    asymptotic_mixture(initial).density()
}

/// Bell state selected by a readout sequence from a basis start, assuming the
/// oscillation has been frozen: no flipped readout leaves the stationary
/// state; otherwise the last readout picks the coupled state in that ancilla
/// sector.
pub fn expected_label(initial: BasisLabel, readouts: &[Outcome]) -> BellLabel {
    let roles = sector_roles(initial);
    if readouts.iter().all(|&r| r == roles.ancilla) {
        return roles.stationary;
    }
    match readouts.last() {
        Some(&r) if r == roles.ancilla => roles.coupled_same,
        _ => roles.coupled_flipped,
    }
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub state: DensityMatrix,
    pub iterations: usize,
    /// Trace distance between the last two iterates.
    pub residual: f64,
}

/// `tau` within 1e-3 of a multiple of pi/2 makes the free propagator
/// periodic with the measurements.
pub fn is_pathological_tau(tau: f64) -> bool {
    let k = (tau / FRAC_PI_2).round();
    (tau - k * FRAC_PI_2).abs() < 1e-3
}

/// Iterates `M = measure_nonselective o evolve(tau)` from `rho0` until
/// successive iterates are closer than `tol` in trace distance.
pub fn asymptotic_state_numeric(
    rho0: &DensityMatrix,
    tau: f64,
    params: &ModelParams,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    if is_pathological_tau(tau) {
        return Err(Error::PathologicalTau { tau });
    }
    let control = ControlState::free(f64::INFINITY);
    let u = step_unitary(0.0, tau, params, &control, &PropagatorConfig::default())?;
    let mut state = rho0.clone();
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = measure_nonselective(&apply_unitary(&u, &state)?);
        residual = trace_distance(&next, &state)?;
        state = next;
        if residual < tol {
            return Ok(FixedPoint {
                state,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QubitLabel {
    A,
    B,
    C,
}

fn flip_operator(qubit: QubitLabel) -> ComplexMatrix {
    let x = pauli_x();
    let id = ComplexMatrix::identity(2);
    match qubit {
        QubitLabel::A => three_qubit(&x, &id, &id),
        QubitLabel::B => three_qubit(&id, &x, &id),
        QubitLabel::C => three_qubit(&id, &id, &x),
    }
}

/// Flips one qubit in the computational basis (conjugation by its `sigma_x`).
pub trait Flip: Sized {
    fn flip(&self, qubit: QubitLabel) -> Self;
}

impl Flip for PureState {
    fn flip(&self, qubit: QubitLabel) -> Self {
        assert_eq!(self.dim(), 8, "flips act on three-qubit states");
        PureState::normalized(flip_operator(qubit).apply(self))
            .expect("unitary image of a unit vector")
    }
}

impl Flip for DensityMatrix {
    fn flip(&self, qubit: QubitLabel) -> Self {
        assert_eq!(self.dim(), 8, "flips act on three-qubit states");
        DensityMatrix::from_matrix_unchecked(flip_operator(qubit).conjugate_by(self.matrix()))
    }
}

pub fn flip<T: Flip>(value: &T, qubit: QubitLabel) -> T {
    value.flip(qubit)
}

const MAX_CLOSED_FORM_LEN: usize = 32;

/// Closed-form state and probability after a readout sequence from `|111>`
/// with measurements every `tau` and no field.
///
/// An all-1 prefix of length `n` leaves `|1_A>(|Phi-> + a^n |Phi+>)/N_n`
/// with `N_n^2 = 1 + |a|^{2n}` and probability `N_n^2/2`. The first 0 gives
/// `|0_A, Psi+>`; from then on outcome 0 keeps `|0_A, Psi+>` or
/// `|1_A, Phi+>` with conditional probability `|a|^2` and moves to the other
/// one with `|b|^2`.
pub fn post_sequence_state(readouts: &[Outcome], tau: f64) -> Result<(PureState, f64)> {
    if readouts.len() > MAX_CLOSED_FORM_LEN {
        return Err(Error::InvalidParameter(format!(
            "closed form supports at most {MAX_CLOSED_FORM_LEN} readouts, got {}",
            readouts.len()
        )));
    }
    let RabiCoefficients { a, b, .. } = ab_coefficients(tau)?;
    let (a2, b2) = (a.norm_sqr(), b.norm_sqr());
    let phi_minus = ancilla_bell_state(Outcome::One, BellLabel::PhiMinus);
    let phi_plus = ancilla_bell_state(Outcome::One, BellLabel::PhiPlus);
    let psi_plus = ancilla_bell_state(Outcome::Zero, BellLabel::PsiPlus);

    let prefix = readouts.iter().take_while(|&&r| r == Outcome::One).count();
    let norm2 = |n: usize| 1.0 + a2.powi(n as i32);
    if prefix == readouts.len() {
        let an = a.powi(prefix as i32);
        let v = phi_minus.as_dvector() + phi_plus.as_dvector() * an;
        let state = PureState::normalized(v)?;
        return Ok((state, norm2(prefix) / 2.0));
    }

    // The prefix has probability N_p^2/2 and the first 0 then |a^p b|^2/N_p^2.
    let mut probability = 0.5 * a2.powi(prefix as i32) * b2;
    let mut current = Outcome::Zero;
    for &r in &readouts[prefix + 1..] {
        probability *= if r == current { a2 } else { b2 };
        current = r;
    }
    let state = match current {
        Outcome::Zero => psi_plus,
        Outcome::One => phi_plus,
    };
    Ok((state, probability))
}

/// `P(1, ..., 1) = N_n^2 / 2 = (1 + cos^{2n}(2 tau)) / 2`.
pub fn allone_sequence_probability(n: usize, tau: f64) -> f64 {
    0.5 * (1.0 + (2.0 * tau).cos().powi(2 * n as i32))
}
