use cradle::experiments::{run_sweep, SweepParameter, SweepPlan};
use cradle::lattice::{build_hamiltonian, CouplingMatrix};
use cradle::observables::{find_optimal_receiving_time, PEAK_REL_TOL};
use cradle::propagator::{eigendecompose, evolve_oracle, probability_map, Propagator, StateVector};
use cradle::ChainSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn chain() -> impl Strategy<Value = ChainSpec> {
    (3usize..=30, 0.2f64..2.0, 0.01f64..=1.0)
        .prop_map(|(n, j, a)| ChainSpec::from_couplings(n, j, a * j).unwrap())
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("zero vector", |v| {
        let amps: Vec<Complex64> = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        (norm > 1e-6).then(|| StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()))
    })
}

/// Random symmetric matrix with non-negative couplings and zero diagonal.
fn coupling_matrix() -> impl Strategy<Value = CouplingMatrix> {
    (2usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(0.0f64..2.0, n * (n - 1) / 2).prop_map(move |upper| {
            let mut m = DMatrix::zeros(n, n);
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    m[(i, j)] = upper[k];
                    m[(j, i)] = upper[k];
                    k += 1;
                }
            }
            CouplingMatrix::from_matrix(m).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_structure(spec in chain()) {
        let h = build_hamiltonian(&spec).unwrap();
        prop_assert_eq!(h.nonzero_count(), 2 * (spec.n_sites - 1));
        let n = spec.n_sites;
        let r = DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 });
        prop_assert_eq!((h.as_matrix() * &r - &r * h.as_matrix()).amax(), 0.0);
    }

    #[test]
    fn evolution_is_unitary_and_matches_series(
        (spec, psi) in chain().prop_flat_map(|s| { let n = s.n_sites; (Just(s), state(n)) }),
        z in 0.0f64..100.0,
    ) {
        let h = build_hamiltonian(&spec).unwrap();
        let out = Propagator::new(&h).unwrap().evolve(&psi, z).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() <= 1e-10);
        let oracle = evolve_oracle(&h, &psi, z).unwrap();
        prop_assert!(out.max_abs_diff(&oracle) <= 1e-8);
    }

    #[test]
    fn general_couplings_match_series(h in coupling_matrix(), z in 0.0f64..20.0) {
        let n = h.dim();
        let psi = StateVector::localized(n, 1).unwrap();
        let out = Propagator::new(&h).unwrap().evolve(&psi, z).unwrap();
        prop_assert!(out.max_abs_diff(&evolve_oracle(&h, &psi, z).unwrap()) <= 1e-8);
        let spectrum = eigendecompose(&h).unwrap();
        prop_assert!(spectrum.reconstruction_error(&h) <= 1e-10);
        prop_assert!(spectrum.orthonormality_error() <= 1e-10);
    }

    #[test]
    fn mirror_injection(spec in chain(), z in 0.0f64..100.0) {
        let n = spec.n_sites;
        let prop = Propagator::new(&build_hamiltonian(&spec).unwrap()).unwrap();
        let a = prop.evolve(&StateVector::localized(n, 1).unwrap(), z).unwrap().probabilities();
        let b = prop.evolve(&StateVector::localized(n, n).unwrap(), z).unwrap().probabilities();
        for i in 0..n {
            prop_assert!((a[i] - b[n - 1 - i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn bipartite_spectrum_is_symmetric(spec in chain()) {
        let spectrum = eigendecompose(&build_hamiltonian(&spec).unwrap()).unwrap();
        let ev = &spectrum.eigenvalues;
        let n = ev.len();
        for k in 0..n {
            prop_assert!((ev[k] + ev[n - 1 - k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn field_rows_sum_to_one(spec in chain(), step in 0.05f64..2.0) {
        let h = build_hamiltonian(&spec).unwrap();
        let psi = StateVector::localized(spec.n_sites, 1).unwrap();
        let field = probability_map(&h, &psi, 50.0, step).unwrap();
        for row in &field.rows {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn peak_time_scales_inversely(c in 0.5f64..4.0) {
        let spec = ChainSpec::from_couplings(11, 1.0, 0.1).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        let base = find_optimal_receiving_time(&h, 11, (5.0, 60.0)).unwrap();
        let scaled = find_optimal_receiving_time(&h.scaled(c).unwrap(), 11, (5.0 / c, 60.0 / c)).unwrap();
        prop_assert!((scaled.tau * c - base.tau).abs() <= 1e3 * PEAK_REL_TOL * base.tau);
        prop_assert!((scaled.eta - base.eta).abs() <= 1e-9);
    }
}

#[test]
fn sweep_result_independent_of_value_order() {
    let spec = ChainSpec::from_couplings(11, 1.0, 0.1).unwrap();
    let up = SweepPlan::new(spec.clone(), SweepParameter::WeakPitch, vec![12.0, 13.0, 14.0, 15.0]);
    let down = SweepPlan::new(spec, SweepParameter::WeakPitch, vec![15.0, 14.0, 13.0, 12.0]);
    assert_eq!(run_sweep(&up).unwrap().points, run_sweep(&down).unwrap().points);
}
