use ancilla_bell::analytic::{asymptotic_state, asymptotic_state_numeric};
use ancilla_bell::dynamics::{evolve_density, exp_hermitian, PropagatorConfig};
use ancilla_bell::measurement::{
    measure_nonselective, measure_selective, project, sequence_probability,
    sequence_probability_trace,
};
use ancilla_bell::metrics::{bell_fidelity, concurrence, fidelity, trace_distance};
use ancilla_bell::model::{bell_state, BasisLabel, BellLabel, ControlState, ModelParams, Outcome};
use ancilla_bell::protocol::{mix_seed, run_trajectory, RunConfig};
use ancilla_bell::qcore::{
    hermitian_eig, kron, partial_trace_ancilla, validate_density, ComplexMatrix, DensityMatrix, C64,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ginibre(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

fn random_density(seed: u64, dim: usize) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, dim);
    let m = &g * g.adjoint();
    let tr = m.trace();
    validate_density(ComplexMatrix::from_dmatrix(m / tr).unwrap(), 1e-9).unwrap()
}

fn random_rank_deficient(seed: u64, dim: usize, rank: usize) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, dim).columns(0, rank).into_owned();
    let m = &g * g.adjoint();
    let tr = m.trace();
    validate_density(ComplexMatrix::from_dmatrix(m / tr).unwrap(), 1e-9).unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    ComplexMatrix::from_dmatrix((&g + g.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    exp_hermitian(&random_hermitian(rng, dim), 3.0).unwrap()
}

#[test]
fn fuchs_van_de_graaf_on_random_pairs() {
    for k in 0..200u64 {
        let rho = random_density(2 * k, 4);
        let sigma = if k % 4 == 0 {
            DensityMatrix::from_pure(&bell_state(BellLabel::ALL[(k / 4) as usize % 4])).unwrap()
        } else {
            random_density(2 * k + 1, 4)
        };
        let d = trace_distance(&rho, &sigma).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        assert!(1.0 - f <= d + 1e-9, "pair {k}: 1-F={} D={d}", 1.0 - f);
        assert!(
            d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9,
            "pair {k}: D={d} F={f}"
        );
    }
}

#[test]
fn triangle_inequality_on_random_triples() {
    for k in 0..200u64 {
        let dim = if k % 2 == 0 { 4 } else { 8 };
        let (a, b, c) = (
            random_density(3 * k, dim),
            random_density(3 * k + 1, dim),
            random_density(3 * k + 2, dim),
        );
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        assert!(ac <= ab + bc + 1e-9);
        assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn bell_concurrences_are_one() {
    for label in BellLabel::ALL {
        let rho = DensityMatrix::from_pure(&bell_state(label)).unwrap();
        assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn concurrence_is_invariant_under_local_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 0..50u64 {
        let rho = if k % 2 == 0 {
            random_density(k, 4)
        } else {
            random_rank_deficient(k, 4, 1)
        };
        let local = kron(&random_unitary(&mut rng, 2), &random_unitary(&mut rng, 2)).unwrap();
        let rotated = validate_density(local.conjugate_by(rho.matrix()), 1e-9).unwrap();
        let (c0, c1) = (concurrence(&rho).unwrap(), concurrence(&rotated).unwrap());
        assert!((c0 - c1).abs() < 1e-10, "state {k}: {c0} vs {c1}");
    }
}

#[test]
fn pure_target_fidelity_matches_overlap() {
    for k in 0..100u64 {
        let rho = random_density(k, 4);
        for label in BellLabel::ALL {
            let target = DensityMatrix::from_pure(&bell_state(label)).unwrap();
            let via_roots = fidelity(&rho, &target).unwrap();
            let direct = bell_fidelity(&rho, label).unwrap();
            assert!(
                (via_roots - direct).abs() < 1e-10,
                "state {k} {label}: {via_roots} vs {direct}"
            );
        }
    }
}

#[test]
fn fidelity_is_symmetric() {
    for k in 0..100u64 {
        let (a, b) = (random_density(2 * k, 4), random_density(2 * k + 1, 4));
        assert!((fidelity(&a, &b).unwrap() - fidelity(&b, &a).unwrap()).abs() < 1e-10);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn selective_branches_rebuild_nonselective_map() {
    for k in 0..50u64 {
        let rho = random_density(k, 8);
        let (zero, p0) = project(&rho, Outcome::Zero).unwrap();
        let (one, p1) = project(&rho, Outcome::One).unwrap();
        let mixed = &zero.matrix().scale_real(p0) + &one.matrix().scale_real(p1);
        assert!(mixed.max_abs_diff(measure_nonselective(&rho).matrix()) < 1e-12);
    }
}

#[test]
fn exhaustive_sequence_probabilities_sum_to_one() {
    let params = ModelParams::default();
    let control = ControlState::free(100.0);
    let rho0 =
        DensityMatrix::from_pure(&ancilla_bell::model::basis_state(1, 1, 1).unwrap()).unwrap();
    for n in 1..=6usize {
        let mut total = 0.0;
        for bits in 0..(1u32 << n) {
            let seq: Vec<Outcome> = (0..n)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        Outcome::One
                    } else {
                        Outcome::Zero
                    }
                })
                .collect();
            let chained = sequence_probability(&seq, 0.5, &rho0, &params, &control).unwrap();
            if n <= 4 {
                let traced =
                    sequence_probability_trace(&seq, 0.5, &rho0, &params, &control).unwrap();
                assert!((chained - traced).abs() < 1e-12);
            }
            total += chained;
        }
        assert!((total - 1.0).abs() < 1e-10, "N={n}: {total}");
    }
}

#[test]
fn numeric_fixed_point_never_populates_psi_minus_from_111() {
    let rho0 =
        DensityMatrix::from_pure(&ancilla_bell::model::basis_state(1, 1, 1).unwrap()).unwrap();
    let fixed =
        asymptotic_state_numeric(&rho0, 0.5, &ModelParams::default(), 1e-12, 10_000).unwrap();
    let bc = partial_trace_ancilla(&fixed.state).unwrap();
    assert!(bc.expectation(&bell_state(BellLabel::PsiMinus)) < 1e-14);
    let label: BasisLabel = "111".parse().unwrap();
    assert!(trace_distance(&fixed.state, &asymptotic_state(label)).unwrap() < 1e-10);
}

#[test]
fn ramped_trajectory_probabilities_match_replayed_chain() {
    let cfg = RunConfig {
        n_traj: 1,
        ..RunConfig::default()
    };
    let params = cfg.params();
    let prop = cfg.propagator();
    let mut checked = 0;
    for k in 0..40u64 {
        let traj = run_trajectory(&cfg, mix_seed(21, k)).unwrap();
        let Some(t_star) = traj.t_star else { continue };
        let mut control = ControlState {
            t_star: Some(t_star),
            ..ControlState::free(cfg.t_f)
        };
        control.feedback_mode = cfg.feedback_mode;
        let mut state = cfg.initial_state();
        let mut t = 0.0;
        let mut product = 1.0;
        for r in traj.readouts.iter().filter(|r| r.time <= cfg.t_f + 1e-9) {
            // the ramp is zero until t_star, so the full control can be used throughout
            state = evolve_density(&state, t, r.time, &params, &control, &prop).unwrap();
            let (next, p) = project(&state, r.outcome).unwrap();
            assert!((p - r.probability).abs() < 1e-10);
            product *= p;
            state = next;
            t = r.time;
        }
        let recorded: f64 = traj
            .readouts
            .iter()
            .filter(|r| r.time <= cfg.t_f + 1e-9)
            .map(|r| r.probability)
            .product();
        assert!((product - recorded).abs() < 1e-10);
        checked += 1;
    }
    assert!(checked > 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validated_states_keep_invariants(seed in any::<u64>(), big in any::<bool>()) {
        let rho = random_density(seed, if big { 8 } else { 4 });
        prop_assert!(rho.matrix().hermiticity_error() < 1e-10);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-9);
        let eig = hermitian_eig(rho.matrix()).unwrap();
        prop_assert!(eig.values.iter().all(|&v| v >= -1e-10));
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(eig.reconstruct().max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn nonselective_measurement_is_idempotent(seed in any::<u64>()) {
        let rho = random_density(seed, 8);
        let once = measure_nonselective(&rho);
        let twice = measure_nonselective(&once);
        prop_assert!(once.max_abs_diff(&twice) < 1e-15);
        let (bc, bc_once) = (partial_trace_ancilla(&rho).unwrap(), partial_trace_ancilla(&once).unwrap());
        prop_assert!(bc.max_abs_diff(&bc_once) < 1e-12);
    }

    #[test]
    fn selective_draw_picks_outcome_by_threshold(seed in any::<u64>(), draw in 0.0f64..1.0) {
        let rho = random_density(seed, 8);
        let out = measure_selective(&rho, draw).unwrap();
        let p0 = project(&rho, Outcome::Zero).map(|(_, p)| p).unwrap_or(0.0);
        prop_assert_eq!(out.outcome, if draw < p0 { Outcome::Zero } else { Outcome::One });
    }

    #[test]
    fn free_evolution_preserves_trace_and_purity(seed in any::<u64>(), dt in 0.0f64..3.0) {
        let rho = random_density(seed, 8);
        let out = evolve_density(&rho, 0.0, dt, &ModelParams::default(), &ControlState::free(10.0), &PropagatorConfig::default()).unwrap();
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_stays_in_unit_interval(a in any::<u64>(), b in any::<u64>()) {
        let d = trace_distance(&random_density(a, 4), &random_density(b, 4)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn concurrence_stays_in_unit_interval(seed in any::<u64>(), rank in 1usize..=4) {
        let c = concurrence(&random_rank_deficient(seed, 4, rank)).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}
