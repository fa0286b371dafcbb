//! Projective measurements of the ancilla.

use serde::Serialize;

use crate::dynamics::{step_unitary, PropagatorConfig};
use crate::error::{Error, Result};
use crate::model::{projector, ControlState, ModelParams, Outcome};
use crate::qcore::{ComplexMatrix, DensityMatrix};

/// One selective measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    /// 1-based position in the readout sequence.
    pub index: usize,
    pub time: f64,
    pub outcome: Outcome,
    /// Born probability of `outcome` given the state just before the measurement.
    pub probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ReadoutSequence(pub Vec<MeasurementRecord>);

impl ReadoutSequence {
    pub fn push(&mut self, record: MeasurementRecord) {
        debug_assert!(self.0.last().is_none_or(|r| r.time < record.time));
        self.0.push(record);
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        self.0.iter().map(|r| r.outcome).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MeasurementRecord> {
        self.0.iter()
    }

    /// Product of the recorded conditional probabilities.
    pub fn joint_probability(&self) -> f64 {
        self.0.iter().map(|r| r.probability).product()
    }
}

/// `(Tr rho Pi_0, Tr rho Pi_1)`.
pub fn outcome_probabilities(rho: &DensityMatrix) -> (f64, f64) {
    assert_eq!(rho.dim(), 8, "ancilla measurements act on the full state");
    let p1: f64 = (4..8).map(|k| rho.get(k, k).re).sum();
    let p0: f64 = (0..4).map(|k| rho.get(k, k).re).sum();
    let total = p0 + p1;
    (p0 / total, p1 / total)
}

/// `Pi_0 rho Pi_0 + Pi_1 rho Pi_1`: drops every coherence between the ancilla sectors.
pub fn measure_nonselective(rho: &DensityMatrix) -> DensityMatrix {
    assert_eq!(rho.dim(), 8, "ancilla measurements act on the full state");
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn_unchecked(8, |r, c| {
        if r / 4 == c / 4 {
            m.get(r, c)
        } else {
            Default::default()
        }
    });
    DensityMatrix::from_matrix_unchecked(out)
}

/// Post-measurement state for a prescribed outcome together with its probability.
pub fn project(rho: &DensityMatrix, outcome: Outcome) -> Result<(DensityMatrix, f64)> {
    let (p0, p1) = outcome_probabilities(rho);
    let probability = match outcome {
        Outcome::Zero => p0,
        Outcome::One => p1,
    };
    if !(probability > 0.0) {
        return Err(Error::ImpossibleOutcome {
            outcome: outcome.bit(),
        });
    }
    let pi = projector(outcome);
    let projected = pi.conjugate_by(rho.matrix()).scale_real(1.0 / probability);
    // `rho` is already valid, so the projected block is Hermitian and PSD.
    Ok((DensityMatrix::from_matrix_unchecked(projected), probability))
}

#[derive(Clone, Debug)]
pub struct SelectiveOutcome {
    pub outcome: Outcome,
    pub state: DensityMatrix,
    pub probability: f64,
}

/// Born-rule sampling with a caller-supplied uniform draw in `[0, 1)`:
/// outcome 0 iff `draw < p0`.
pub fn measure_selective(rho: &DensityMatrix, draw: f64) -> Result<SelectiveOutcome> {
    if !(0.0..1.0).contains(&draw) {
        return Err(Error::InvalidParameter(format!(
            "draw must lie in [0, 1), got {draw}"
        )));
    }
    let (p0, _) = outcome_probabilities(rho);
    let outcome = if draw < p0 {
        Outcome::Zero
    } else {
        Outcome::One
    };
    let (state, probability) = project(rho, outcome)?;
    Ok(SelectiveOutcome {
        outcome,
        state,
        probability,
    })
}

/// Probability of a readout sequence with measurements every `tau`, chaining
/// conditional Born probabilities.
pub fn sequence_probability(
    readouts: &[Outcome],
    tau: f64,
    rho0: &DensityMatrix,
    params: &ModelParams,
    control: &ControlState,
) -> Result<f64> {
    Ok(conditioned_state(readouts, tau, rho0, params, control)?.map_or(0.0, |(_, p)| p))
}

/// State after a readout sequence together with its probability, or `None`
/// when some readout is impossible.
pub fn conditioned_state(
    readouts: &[Outcome],
    tau: f64,
    rho0: &DensityMatrix,
    params: &ModelParams,
    control: &ControlState,
) -> Result<Option<(DensityMatrix, f64)>> {
    let cfg = PropagatorConfig::default();
    let u = step_unitary(0.0, tau, params, control, &cfg)?;
    let mut rho = rho0.clone();
    let mut probability = 1.0;
    for &outcome in readouts {
        let evolved = DensityMatrix::from_matrix_unchecked(u.conjugate_by(rho.matrix()));
        match project(&evolved, outcome) {
            Ok((next, p)) => {
                probability *= p;
                rho = next;
            }
            Err(Error::ImpossibleOutcome { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some((rho, probability)))
}

/// Same probability as a single trace
/// `Tr[Pi_N U ... Pi_1 U rho0 U^dagger Pi_1 ... U^dagger Pi_N]`.
pub fn sequence_probability_trace(
    readouts: &[Outcome],
    tau: f64,
    rho0: &DensityMatrix,
    params: &ModelParams,
    control: &ControlState,
) -> Result<f64> {
    let cfg = PropagatorConfig::default();
    let u = step_unitary(0.0, tau, params, control, &cfg)?;
    let mut kraus = ComplexMatrix::identity(8);
    for &outcome in readouts {
        kraus = &projector(outcome) * &(&u * &kraus);
    }
    Ok(kraus.conjugate_by(rho0.matrix()).trace().re)
}
