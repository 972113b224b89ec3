use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use ptq_core::dynamics::{propagate_spectral, propagate_strided};
use ptq_core::entanglement::{concurrence_mixed, concurrence_pure, DensityMatrix4};
use ptq_core::linalg::{ComplexMatrix4, StateVector4, C64};
use ptq_core::model::{build_hamiltonian, exchange_residual, pt_symmetry_residual, SystemParams};
use ptq_core::sensing::{qfi, qfi_with, Gauge, Kappa, DEFAULT_STEP};
use ptq_core::spectrum::{closed_form_eigenvalues_unchecked, eigenvalues_qr, match_eigenvalues, min_pairwise_gap};

const SEED: u64 = 0x5eed_2024;

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(SEED), failure_persistence: None, ..Config::default() }
}

fn params() -> impl Strategy<Value = SystemParams> {
    (0.1f64..3.0, 0.0f64..1.2).prop_map(|(w, j)| SystemParams::new(w, j))
}

fn state() -> impl Strategy<Value = StateVector4> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("non-zero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| {
            StateVector4([0, 1, 2, 3].map(|k| C64::new(a[2 * k], a[2 * k + 1]))).normalized().unwrap()
        })
}

/// Generic SU(2) element from three angles.
fn su2(a: f64, b: f64, c: f64) -> [[C64; 2]; 2] {
    let (s, co) = b.sin_cos();
    [
        [C64::from_polar(co, a), C64::from_polar(s, c)],
        [-C64::from_polar(s, -c), C64::from_polar(co, -a)],
    ]
}

fn local_unitary() -> impl Strategy<Value = ComplexMatrix4> {
    prop::array::uniform6(-3.2f64..3.2)
        .prop_map(|x| ComplexMatrix4::kron(&su2(x[0], x[1], x[2]), &su2(x[3], x[4], x[5])))
}

fn conjugate_mismatch(e: &[C64; 4]) -> f64 {
    match_eigenvalues(e, &e.map(|z| z.conj())).1
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn spectrum_is_closed_under_conjugation(p in params()) {
        let e = closed_form_eigenvalues_unchecked(&p).unwrap();
        prop_assert!(conjugate_mismatch(&e) <= 1e-10, "{e:?}");
        let o = eigenvalues_qr(&build_hamiltonian(&p)).unwrap();
        if min_pairwise_gap(&o) > 1e-4 {
            prop_assert!(conjugate_mismatch(&o) <= 1e-10, "{o:?}");
        }
    }

    #[test]
    fn hamiltonian_symmetries(p in params(), g in 0.0f64..2.0) {
        let p = SystemParams::with_gamma(p.omega, p.j, g);
        let h = build_hamiltonian(&p);
        prop_assert!(pt_symmetry_residual(&p) <= 1e-13);
        prop_assert!(exchange_residual(&h) <= 1e-14);
        prop_assert_eq!(h.trace(), C64::new(0.0, 0.0));
    }

    #[test]
    fn eigenvalues_sum_to_trace(p in params()) {
        let e = closed_form_eigenvalues_unchecked(&p).unwrap();
        prop_assert_eq!(e[0], C64::new(-p.j, 0.0));
        prop_assert!(e.iter().sum::<C64>().norm() <= 1e-10);
        let o = eigenvalues_qr(&build_hamiltonian(&p)).unwrap();
        prop_assert!(o.iter().sum::<C64>().norm() <= 1e-10);
        prop_assert!(o.iter().any(|z| (z + p.j).norm() <= 1e-10) || min_pairwise_gap(&o) < 1e-4);
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn concurrence_is_local_unitary_invariant(psi in state(), u in local_unitary(), phase in -3.2f64..3.2) {
        let c = concurrence_pure(&psi).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let moved = (u.apply(&psi) * C64::from_polar(1.0, phase)).normalized().unwrap();
        prop_assert!((concurrence_pure(&moved).unwrap() - c).abs() <= 1e-9);
        let rho = DensityMatrix4::from_pure(&psi).unwrap();
        prop_assert!((concurrence_mixed(&rho) - c).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn qfi_ignores_parameter_dependent_phase(p in params(), c in -10.0f64..10.0) {
        let e = closed_form_eigenvalues_unchecked(&p).unwrap();
        prop_assume!((e[2] - e[3]).norm() > 1e-2);
        for kappa in [Kappa::J, Kappa::Omega] {
            let Ok(f) = qfi(&p, kappa, DEFAULT_STEP) else { continue };
            let g = qfi_with(&p, kappa, DEFAULT_STEP, Gauge::ExtraPhase(c)).unwrap();
            prop_assert!((g - f).abs() <= 1e-6 * f.max(1e-300), "{kappa:?}: {g} vs {f}");
        }
    }
}

/// Over one decade of `dt` the error against the spectral propagator falls by ~10^4.
#[test]
fn integrator_is_fourth_order() {
    let p = SystemParams::new(2.0, 0.4);
    let psi0 = StateVector4::basis(0);
    let t = 3.0;
    let exact = propagate_spectral(&p, &psi0, t).unwrap();
    let error = |dt: f64| {
        let traj = propagate_strided(&p, &psi0, t, dt, usize::MAX).unwrap();
        let last = *traj.states.last().unwrap();
        let z = last.inner(&exact);
        (last * (z / z.norm()) - exact).norm()
    };
    let e: Vec<f64> = [0.03, 0.015, 0.0075, 0.003].map(error).to_vec();
    for w in e[..3].windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.7..4.3).contains(&order), "errors {e:?}");
    }
    let decade = (e[0] / e[3]).log10();
    assert!((3.7..4.3).contains(&decade), "errors {e:?}");
}
