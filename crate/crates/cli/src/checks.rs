//! Closed-form oracle suite behind `analytic-check`.

use std::fmt::Write as _;

use ancilla_bell::analytic::{
    ab_coefficients, allone_sequence_probability, asymptotic_state, asymptotic_state_numeric,
    post_sequence_state,
};
use ancilla_bell::dynamics::{step_unitary, PropagatorConfig};
use ancilla_bell::measurement::conditioned_state;
use ancilla_bell::metrics::trace_distance;
use ancilla_bell::model::{
    ancilla_bell_state, basis_state, BasisLabel, BellLabel, ControlState, ModelParams, Outcome,
};
use ancilla_bell::qcore::{DensityMatrix, PureState};
use ancilla_bell::Result;

/// Longest readout sequence checked exhaustively.
pub const MAX_SEQUENCE_LEN: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    /// Worst deviation found.
    pub error: f64,
    pub tolerance: f64,
}

impl CheckRow {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            error,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.error < self.tolerance
    }
}

pub fn all_sequences(n: usize) -> impl Iterator<Item = Vec<Outcome>> {
    (0..1u32 << n).map(move |bits| {
        (0..n)
            .map(|k| {
                if bits >> (n - 1 - k) & 1 == 1 {
                    Outcome::One
                } else {
                    Outcome::Zero
                }
            })
            .collect()
    })
}

fn rho111() -> DensityMatrix {
    DensityMatrix::from_pure(&basis_state(1, 1, 1).expect("bits")).expect("unit vector")
}

/// Worst overlap defect and probability error of the closed form against the
/// numerical selective chain over all sequences of length `1..=max_len`.
pub fn sequence_agreement(tau: f64, max_len: usize) -> Result<(f64, f64)> {
    let params = ModelParams::with_field(0.0)?;
    let control = ControlState::free(f64::INFINITY);
    let rho0 = rho111();
    let (mut overlap_err, mut prob_err) = (0.0f64, 0.0f64);
    for n in 1..=max_len {
        for seq in all_sequences(n) {
            let (state, p) = post_sequence_state(&seq, tau)?;
            match conditioned_state(&seq, tau, &rho0, &params, &control)? {
                Some((rho, p_num)) => {
                    overlap_err = overlap_err.max(1.0 - rho.expectation(&state));
                    prob_err = prob_err.max((p - p_num).abs());
                }
                None => prob_err = prob_err.max(p),
            }
        }
    }
    Ok((overlap_err, prob_err))
}

/// `|sum of branch probabilities - 1|` over all `2^n` sequences, closed form
/// and numerical chain.
pub fn branch_sum_error(tau: f64, n: usize) -> Result<(f64, f64)> {
    let params = ModelParams::with_field(0.0)?;
    let control = ControlState::free(f64::INFINITY);
    let rho0 = rho111();
    let (mut closed, mut numeric) = (0.0, 0.0);
    for seq in all_sequences(n) {
        closed += post_sequence_state(&seq, tau)?.1;
        numeric += conditioned_state(&seq, tau, &rho0, &params, &control)?.map_or(0.0, |(_, p)| p);
    }
    Ok(((closed - 1.0f64).abs(), (numeric - 1.0f64).abs()))
}

pub fn run_checks(tau: f64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let params = ModelParams::with_field(0.0)?;
    let control = ControlState::free(f64::INFINITY);

    let one_phi = ancilla_bell_state(Outcome::One, BellLabel::PhiPlus);
    let zero_psi = ancilla_bell_state(Outcome::Zero, BellLabel::PsiPlus);
    let mut ab_err = 0.0f64;
    let mut norm_err = 0.0f64;
    for t in [0.0, 0.25, tau, std::f64::consts::FRAC_PI_4, 1.0] {
        let c = ab_coefficients(t)?;
        let u = step_unitary(0.0, t, &params, &control, &PropagatorConfig::default())?;
        ab_err = ab_err.max((u.sandwich(&one_phi, &one_phi) - c.a).norm());
        ab_err = ab_err.max((u.sandwich(&zero_psi, &one_phi) - c.b).norm());
        norm_err = norm_err.max((c.a.norm_sqr() + c.b.norm_sqr() - 1.0).abs());
    }
    rows.push(CheckRow::new("a, b vs propagator elements", ab_err, 1e-12));
    rows.push(CheckRow::new("|a|^2 + |b|^2 = 1", norm_err, 1e-12));

    let (overlap_err, prob_err) = sequence_agreement(tau, MAX_SEQUENCE_LEN)?;
    rows.push(CheckRow::new(
        format!("post-sequence states, N <= {MAX_SEQUENCE_LEN}"),
        overlap_err,
        1e-10,
    ));
    rows.push(CheckRow::new(
        format!("sequence probabilities, N <= {MAX_SEQUENCE_LEN}"),
        prob_err,
        1e-10,
    ));

    let (closed_sum, numeric_sum) = branch_sum_error(tau, MAX_SEQUENCE_LEN)?;
    rows.push(CheckRow::new(
        format!("closed-form branch sum, N = {MAX_SEQUENCE_LEN}"),
        closed_sum,
        1e-10,
    ));
    rows.push(CheckRow::new(
        format!("numeric branch sum, N = {MAX_SEQUENCE_LEN}"),
        numeric_sum,
        1e-10,
    ));

    let rho0 = rho111();
    let mut allone_err = 0.0f64;
    for n in 1..=12 {
        let numeric = conditioned_state(&vec![Outcome::One; n], tau, &rho0, &params, &control)?
            .map_or(0.0, |(_, p)| p);
        allone_err = allone_err.max((numeric - allone_sequence_probability(n, tau)).abs());
    }
    rows.push(CheckRow::new(
        "all-1 probability N_n^2/2, n <= 12",
        allone_err,
        1e-10,
    ));
    rows.push(CheckRow::new(
        "all-1 probability limit 1/2",
        (allone_sequence_probability(10_000, tau) - 0.5).abs(),
        1e-10,
    ));

    let mut fixed_err = 0.0f64;
    for label in BasisLabel::all() {
        let rho0 = DensityMatrix::from_pure(&PureState::basis(8, label.index()))?;
        let fixed = asymptotic_state_numeric(&rho0, tau, &params, 1e-12, 10_000)?;
        fixed_err = fixed_err.max(trace_distance(&fixed.state, &asymptotic_state(label))?);
    }
    rows.push(CheckRow::new(
        "asymptotic states, 8 basis starts",
        fixed_err,
        1e-10,
    ));
    Ok(rows)
}

pub fn render_table(tau: f64, rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "closed-form checks at tau = {tau}").unwrap();
    writeln!(
        out,
        "{:<width$}  {:>12}  {:>9}  result",
        "check", "error", "tolerance"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<width$}  {:>12.3e}  {:>9.0e}  {}",
            r.name,
            r.error,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_are_enumerated_in_binary_order() {
        let seqs: Vec<_> = all_sequences(2).collect();
        use Outcome::{One, Zero};
        assert_eq!(
            seqs,
            vec![
                vec![Zero, Zero],
                vec![Zero, One],
                vec![One, Zero],
                vec![One, One]
            ]
        );
    }

    #[test]
    fn every_check_passes_at_default_tau() {
        let rows = run_checks(0.5).unwrap();
        assert!(rows.len() >= 9);
        for r in &rows {
            assert!(r.passed(), "{r:?}");
        }
        let table = render_table(0.5, &rows);
        assert_eq!(table.matches("PASS").count(), rows.len());
    }
}
