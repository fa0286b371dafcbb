//! Three-qubit model: ancilla `A` coupled to targets `B` and `C` through
//! `J u_J sigma_x^A (sigma_x^B + sigma_x^C) - h_z u_h(t) sigma_z^A`.
//!
//! Units: hbar = 1 and energies in units of the coupling `J_x`, so times are
//! in `hbar/J_x`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{kron, ComplexMatrix, PureState, C64, ONE, ZERO};

/// Coupling and field strengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j_x: f64,
    pub h_z: f64,
}

impl ModelParams {
    pub fn new(j_x: f64, h_z: f64) -> Result<Self> {
        if !(j_x > 0.0) || !j_x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "j_x must be positive, got {j_x}"
            )));
        }
        if !(h_z >= 0.0) || !h_z.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "h_z must be non-negative, got {h_z}"
            )));
        }
        Ok(Self { j_x, h_z })
    }

    pub fn with_field(h_z: f64) -> Result<Self> {
        Self::new(1.0, h_z)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            j_x: 1.0,
            h_z: 50.0,
        }
    }
}

/// What the ancilla field does after the first `0` readout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    /// No feedback; `u_h` stays 0.
    #[default]
    None,
    /// Smooth `u_h` ramp starting at the trigger instant.
    Ramp,
    /// `u_h` stays 0 and the measurement interval shrinks to the Zeno interval.
    Zeno,
}

impl FeedbackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::None => "none",
            FeedbackMode::Ramp => "ramp",
            FeedbackMode::Zeno => "zeno",
        }
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FeedbackMode::None),
            "ramp" => Ok(FeedbackMode::Ramp),
            "zeno" => Ok(FeedbackMode::Zeno),
            other => Err(Error::InvalidParameter(format!(
                "feedback mode must be none, ramp or zeno, got {other:?}"
            ))),
        }
    }
}

/// Snapshot of the control functions at some point of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlState {
    /// Interaction switch, 1 during the protocol and 0 after `t_f`.
    pub u_j: f64,
    pub feedback_mode: FeedbackMode,
    /// Measurement instant of the first `0` readout, once it happened.
    pub t_star: Option<f64>,
    pub t_f: f64,
    /// Use period `2 (t_f - t_star)` so the ramp reaches 1 without a jump.
    pub continuous_ramp: bool,
}

impl ControlState {
    /// Coupling on, no field, no trigger.
    pub fn free(t_f: f64) -> Self {
        Self {
            u_j: 1.0,
            feedback_mode: FeedbackMode::None,
            t_star: None,
            t_f,
            continuous_ramp: false,
        }
    }

    pub fn u_h(&self, t: f64) -> f64 {
        match (self.feedback_mode, self.t_star) {
            (FeedbackMode::Ramp, Some(t_star)) => {
                if self.continuous_ramp {
                    continuous_ramp_u_h(t, t_star, self.t_f)
                } else {
                    ramp_u_h(t, t_star, self.t_f)
                }
            }
            _ => 0.0,
        }
    }

    /// Window `(start, end)` on which `u_h` is not constant, if any.
    pub fn ramp_window(&self) -> Option<(f64, f64)> {
        match (self.feedback_mode, self.t_star) {
            (FeedbackMode::Ramp, Some(t_star)) => {
                let end = if self.continuous_ramp {
                    self.t_f.max(t_star)
                } else {
                    0.5 * (t_star + self.t_f)
                };
                (end > t_star).then_some((t_star, end))
            }
            _ => None,
        }
    }
}

/// Feedback ramp triggered at `t_star`.
///
/// Zero before the trigger, `{1 - cos[2 pi (t - t_star)/t_f]}/2` up to
/// `(t_star + t_f)/2`, and 1 afterwards. For `t_star > 0` the cosine branch
/// ends below 1, so the ramp jumps at `(t_star + t_f)/2`.
pub fn ramp_u_h(t: f64, t_star: f64, t_f: f64) -> f64 {
    if t < t_star {
        0.0
    } else if t > 0.5 * (t_star + t_f) {
        1.0
    } else {
        0.5 * (1.0 - (2.0 * PI * (t - t_star) / t_f).cos())
    }
}

/// Jump-free variant: the cosine period is `2 (t_f - t_star)`, so the ramp
/// reaches 1 exactly at `t_f`.
pub fn continuous_ramp_u_h(t: f64, t_star: f64, t_f: f64) -> f64 {
    let width = t_f - t_star;
    if t < t_star {
        0.0
    } else if width <= 0.0 || t >= t_f {
        1.0
    } else {
        0.5 * (1.0 - (PI * (t - t_star) / width).cos())
    }
}

/// The four Bell states of the targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    /// Fixed order, also used to break ties.
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "PhiPlus",
            BellLabel::PhiMinus => "PhiMinus",
            BellLabel::PsiPlus => "PsiPlus",
            BellLabel::PsiMinus => "PsiMinus",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BellLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BellLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown Bell label {s:?}")))
    }
}

/// Computational basis label `|n_A m_B l_C>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub n: u8,
    pub m: u8,
    pub l: u8,
}

impl BasisLabel {
    pub fn new(n: u8, m: u8, l: u8) -> Result<Self> {
        if n > 1 || m > 1 || l > 1 {
            return Err(Error::InvalidParameter(format!(
                "basis bits must be 0 or 1, got ({n},{m},{l})"
            )));
        }
        Ok(Self { n, m, l })
    }

    pub fn index(self) -> usize {
        4 * self.n as usize + 2 * self.m as usize + self.l as usize
    }

    /// All eight labels in flat-index order.
    pub fn all() -> impl Iterator<Item = BasisLabel> {
        (0..8u8).map(|i| BasisLabel {
            n: (i >> 2) & 1,
            m: (i >> 1) & 1,
            l: i & 1,
        })
    }
}

impl Default for BasisLabel {
    fn default() -> Self {
        Self { n: 1, m: 1, l: 1 }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.n, self.m, self.l)
    }
}

impl FromStr for BasisLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(()),
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                Error::InvalidParameter(format!("initial state must be three bits, got {s:?}"))
            })?;
        match bits.as_slice() {
            [n, m, l] => BasisLabel::new(*n, *m, *l),
            _ => Err(Error::InvalidParameter(format!(
                "initial state must be three bits, got {s:?}"
            ))),
        }
    }
}

impl Serialize for BasisLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BasisLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ancilla readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            b => Err(Error::InvalidParameter(format!(
                "readout must be 0 or 1, got {b}"
            ))),
        }
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        o.bit()
    }
}

impl TryFrom<u8> for Outcome {
    type Error = Error;
    fn try_from(b: u8) -> Result<Self> {
        Outcome::from_bit(b)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[ZERO, ONE, ONE, ZERO]).expect("2x2")
}

/// `sigma_z` in the `(|0>, |1>)` ordering, where `|1>` is the `+1` eigenvector.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[-ONE, ZERO, ZERO, ONE]).expect("2x2")
}

/// `sigma_y` in the `(|0>, |1>)` ordering with `|1>` spin up.
pub fn pauli_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_rows(2, &[ZERO, i, -i, ZERO]).expect("2x2")
}

/// `Z = (1 + sigma_z)/2`, the projector onto `|1>`.
pub fn number_operator() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[ZERO, ZERO, ZERO, ONE]).expect("2x2")
}

/// Embeds single-qubit operators on `A`, `B`, `C` into the eight-dimensional space.
pub fn three_qubit(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    kron(&kron(a, b).expect("4x4"), c).expect("8x8")
}

pub fn basis_state(n: u8, m: u8, l: u8) -> Result<PureState> {
    let label = BasisLabel::new(n, m, l)?;
    Ok(PureState::basis(8, label.index()))
}

/// `(|11> +- |00>)/sqrt2` and `(|10> +- |01>)/sqrt2`, amplitudes over `(00, 01, 10, 11)`.
pub fn bell_state(label: BellLabel) -> PureState {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match label {
        BellLabel::PhiPlus => [s, ZERO, ZERO, s],
        BellLabel::PhiMinus => [-s, ZERO, ZERO, s],
        BellLabel::PsiPlus => [ZERO, s, s, ZERO],
        BellLabel::PsiMinus => [ZERO, -s, s, ZERO],
    };
    PureState::new(amps.to_vec()).expect("Bell states are normalized")
}

/// `|i_A> (x) |bell>`.
pub fn ancilla_bell_state(ancilla: Outcome, label: BellLabel) -> PureState {
    PureState::basis(2, ancilla.bit() as usize)
        .kron(&bell_state(label))
        .expect("8-dim")
}

/// `Pi_i = |i_A><i_A| (x) 1_BC`.
pub fn projector(outcome: Outcome) -> ComplexMatrix {
    let k = outcome.bit() as usize;
    ComplexMatrix::from_fn_unchecked(8, |r, c| if r == c && r / 4 == k { ONE } else { ZERO })
}

/// `sigma_x^A (sigma_x^B + sigma_x^C)`.
pub fn coupling_operator() -> ComplexMatrix {
    let x = pauli_x();
    let id = ComplexMatrix::identity(2);
    &three_qubit(&x, &x, &id) + &three_qubit(&x, &id, &x)
}

/// `sigma_z^A (x) 1_BC`.
pub fn ancilla_field_operator() -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    three_qubit(&pauli_z(), &id, &id)
}

/// Hamiltonian for explicit control values.
pub fn hamiltonian_with(params: &ModelParams, u_j: f64, u_h: f64) -> ComplexMatrix {
    let coupling = coupling_operator().scale_real(params.j_x * u_j);
    let field = ancilla_field_operator().scale_real(params.h_z * u_h);
    &coupling - &field
}

pub fn hamiltonian(t: f64, params: &ModelParams, control: &ControlState) -> ComplexMatrix {
    hamiltonian_with(params, control.u_j, control.u_h(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::DensityMatrix;

    fn vec_close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn basis_state_indices() {
        assert_eq!(basis_state(1, 1, 1).unwrap().amplitude(7), ONE);
        assert_eq!(basis_state(1, 1, 0).unwrap().amplitude(6), ONE);
        assert!(basis_state(2, 0, 0).is_err());
    }

    #[test]
    fn number_operator_expectations() {
        let id = ComplexMatrix::identity(2);
        let z_a = three_qubit(&number_operator(), &id, &id);
        for (m, l) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let psi = basis_state(0, m, l).unwrap();
            assert_eq!(z_a.sandwich(&psi, &psi), ZERO);
            let psi = basis_state(1, m, l).unwrap();
            assert_eq!(z_a.sandwich(&psi, &psi), ONE);
        }
        // Z = (1 + sigma_z)/2
        let from_pauli = (&id + &pauli_z()).scale_real(0.5);
        assert_eq!(from_pauli, number_operator());
    }

    #[test]
    fn phi_minus_amplitudes() {
        let s = FRAC_1_SQRT_2;
        let phi = bell_state(BellLabel::PhiMinus);
        assert!(vec_close(
            phi.amplitudes(),
            &[C64::new(-s, 0.0), ZERO, ZERO, C64::new(s, 0.0)],
            1e-15
        ));
    }

    #[test]
    fn bell_states_are_orthonormal() {
        for a in BellLabel::ALL {
            for b in BellLabel::ALL {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((bell_state(a).overlap(&bell_state(b)) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn phi_sum_is_eleven() {
        let sum = bell_state(BellLabel::PhiPlus).as_dvector()
            + bell_state(BellLabel::PhiMinus).as_dvector();
        let v = sum * C64::new(FRAC_1_SQRT_2, 0.0);
        assert!(vec_close(
            v.as_slice(),
            PureState::basis(4, 3).amplitudes(),
            1e-15
        ));
    }

    #[test]
    fn ramp_values() {
        assert_eq!(ramp_u_h(1.0, 2.0, 10.0), 0.0);
        assert!((ramp_u_h(5.0, 0.0, 10.0) - 1.0).abs() < 1e-15);
        assert!((ramp_u_h(2.5, 0.0, 10.0) - 0.5).abs() < 1e-15);
        assert_eq!(ramp_u_h(7.0, 1.0, 10.0), 1.0);
    }

    #[test]
    fn ramp_is_monotone_then_flat() {
        let (t_star, t_f) = (1.5, 10.0);
        let end = 0.5 * (t_star + t_f);
        let mut prev = 0.0;
        for k in 0..=1000 {
            let t = t_star + (end - t_star) * k as f64 / 1000.0;
            let u = ramp_u_h(t, t_star, t_f);
            assert!(u >= prev - 1e-15 && (0.0..=1.0).contains(&u));
            prev = u;
        }
        for k in 1..100 {
            assert_eq!(ramp_u_h(end + 0.01 * k as f64, t_star, t_f), 1.0);
        }
    }

    #[test]
    fn continuous_ramp_reaches_one_without_jump() {
        let (t_star, t_f) = (1.5, 10.0);
        assert!((continuous_ramp_u_h(t_f - 1e-9, t_star, t_f) - 1.0).abs() < 1e-12);
        assert_eq!(continuous_ramp_u_h(t_star - 0.1, t_star, t_f), 0.0);
        assert!((continuous_ramp_u_h(0.5 * (t_star + t_f), t_star, t_f) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_matches_bell_form() {
        let params = ModelParams::default();
        let h = hamiltonian_with(&params, 1.0, 0.0);
        let phi_p = bell_state(BellLabel::PhiPlus);
        let psi_p = bell_state(BellLabel::PsiPlus);
        let bc = (&ComplexMatrix::outer(&phi_p, &psi_p) + &ComplexMatrix::outer(&psi_p, &phi_p))
            .scale_real(2.0);
        let expected = kron(&pauli_x(), &bc).unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn field_only_hamiltonian() {
        let params = ModelParams::default();
        let h = hamiltonian_with(&params, 0.0, 1.0);
        let expected = kron(&pauli_z(), &ComplexMatrix::identity(4))
            .unwrap()
            .scale_real(-50.0);
        assert!(h.max_abs_diff(&expected) < 1e-14);
        for (m, l) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let psi = basis_state(1, m, l).unwrap();
            let out = h.apply(&psi);
            let scaled: Vec<C64> = psi.amplitudes().iter().map(|z| z * -50.0).collect();
            assert!(vec_close(out.as_slice(), &scaled, 1e-14));
        }
    }

    #[test]
    fn phi_minus_sector_is_in_kernel() {
        let h = hamiltonian_with(&ModelParams::default(), 1.0, 0.0);
        for a in [Outcome::Zero, Outcome::One] {
            let out = h.apply(&ancilla_bell_state(a, BellLabel::PhiMinus));
            assert!(out.iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn coupling_confined_to_phi_plus_psi_plus() {
        let h = hamiltonian_with(&ModelParams::default(), 1.0, 0.0);
        let states: Vec<(Outcome, BellLabel)> = [Outcome::Zero, Outcome::One]
            .into_iter()
            .flat_map(|a| BellLabel::ALL.into_iter().map(move |b| (a, b)))
            .collect();
        for &(a1, b1) in &states {
            for &(a2, b2) in &states {
                let elem = h.sandwich(&ancilla_bell_state(a1, b1), &ancilla_bell_state(a2, b2));
                let connected = a1 != a2
                    && matches!(
                        (b1, b2),
                        (BellLabel::PhiPlus, BellLabel::PsiPlus)
                            | (BellLabel::PsiPlus, BellLabel::PhiPlus)
                    );
                if connected {
                    assert!((elem - C64::new(2.0, 0.0)).norm() < 1e-14);
                } else {
                    assert!(elem.norm() < 1e-14, "{a1:?}{b1:?} -> {a2:?}{b2:?}: {elem}");
                }
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_along_ramp() {
        let params = ModelParams::default();
        let control = ControlState {
            u_j: 1.0,
            feedback_mode: FeedbackMode::Ramp,
            t_star: Some(1.0),
            t_f: 10.0,
            continuous_ramp: false,
        };
        for k in 0..200 {
            let h = hamiltonian(0.05 * k as f64, &params, &control);
            assert!(h.hermiticity_error() == 0.0);
        }
    }

    #[test]
    fn projectors_are_complete_and_idempotent() {
        let p0 = projector(Outcome::Zero);
        let p1 = projector(Outcome::One);
        assert_eq!(&p0 + &p1, ComplexMatrix::identity(8));
        assert_eq!(&p0 * &p0, p0);
        assert_eq!(&p1 * &p1, p1);
        let psi = basis_state(1, 1, 1).unwrap();
        assert_eq!(p1.apply(&psi), psi.as_dvector().clone());
        assert!(p0.apply(&psi).iter().all(|z| *z == ZERO));
        let id = ComplexMatrix::identity(2);
        let one = PureState::basis(2, 1).projector();
        assert_eq!(p1, three_qubit(&one, &id, &id));
    }

    #[test]
    fn pauli_y_squares_to_identity_and_anticommutes() {
        let y = pauli_y();
        assert_eq!(&y * &y, ComplexMatrix::identity(2));
        let anti = &(&pauli_x() * &y) + &(&y * &pauli_x());
        assert!(anti.max_abs_diff(&ComplexMatrix::zeros(2)) < 1e-15);
        // bit-1 is spin up, so sigma_y |1> = i |0> in this ordering
        let out = y.apply(&PureState::basis(2, 1));
        assert_eq!(out[0], C64::new(0.0, 1.0));
    }

    #[test]
    fn parsing_round_trips() {
        for label in BasisLabel::all() {
            assert_eq!(label.to_string().parse::<BasisLabel>().unwrap(), label);
        }
        assert!("11".parse::<BasisLabel>().is_err());
        assert!("1a1".parse::<BasisLabel>().is_err());
        for b in BellLabel::ALL {
            assert_eq!(b.as_str().parse::<BellLabel>().unwrap(), b);
        }
        assert_eq!("zeno".parse::<FeedbackMode>().unwrap(), FeedbackMode::Zeno);
        assert!("off".parse::<FeedbackMode>().is_err());
    }

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0).is_err());
        assert!(ModelParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn ancilla_bell_states_span_the_space() {
        let mut total = ComplexMatrix::zeros(8);
        for a in [Outcome::Zero, Outcome::One] {
            for b in BellLabel::ALL {
                total = &total + &ancilla_bell_state(a, b).projector();
            }
        }
        assert!(total.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
        let _ = DensityMatrix::from_pure(&ancilla_bell_state(Outcome::One, BellLabel::PhiMinus))
            .unwrap();
    }
}
