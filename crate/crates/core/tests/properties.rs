use momlab_core::classical::{step, CanonicalMap, HamiltonianSpec, Integrator, PhasePoint, WeightedEnsemble};
use momlab_core::cochain::{exterior_derivative, Cochain};
use momlab_core::convergence::fit_slope;
use momlab_core::io::{read_ensemble, write_ensemble};
use momlab_core::linalg::{self, max_abs, CMatrix};
use momlab_core::quantum::{dual_pairing, evolve_state, momentum_map_pure, unitary_propagator};
use momlab_core::suite::samples::quantum_pure;
use momlab_core::uhlmann::{evolve_w, rho_from_w, WOperator};
use momlab_core::verify::value_identity_check;
use momlab_core::{quantum::evolve_density, Boundary, HermitianOperator, ParameterGrid, SkewHermitianMoment, WaveFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn state(r: &mut ChaCha8Rng, n: usize, hbar: f64) -> WaveFunction {
    let v = linalg::random_vector(r, n);
    WaveFunction::new(v.normalize(), hbar).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pure_momentum_map_is_unitarily_equivariant(seed in any::<u64>(), n in 2usize..7, hbar in 0.3f64..3.0) {
        let mut r = rng(seed);
        let psi = state(&mut r, n, hbar);
        let u = linalg::random_unitary(&mut r, n);
        let lhs = momentum_map_pure(&psi.map(&u).unwrap());
        let rhs = momentum_map_pure(&psi).conjugate(&u);
        prop_assert!(max_abs(&(lhs.entries() - rhs.entries())) < 1e-12 * hbar.max(1.0));
    }

    #[test]
    fn value_identity_holds_for_random_generators(seed in any::<u64>(), n in 2usize..6, hbar in 0.5f64..2.0) {
        let mut r = rng(seed);
        let xi = linalg::random_skew(&mut r, n);
        let report = value_identity_check(&quantum_pure(n, hbar, xi), 8, 1e-12, seed).unwrap();
        prop_assert!(report.passed(), "{}", report.detail);
    }

    #[test]
    fn energy_pairing_is_conserved(seed in any::<u64>(), n in 2usize..6, t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let h = HermitianOperator::new(linalg::random_hermitian(&mut r, n)).unwrap();
        let xi = SkewHermitianMoment::from_hermitian(&h);
        let psi = state(&mut r, n, 1.0);
        let before = dual_pairing(&momentum_map_pure(&psi), &xi).unwrap();
        let after = dual_pairing(&momentum_map_pure(&evolve_state(&psi, &h, t).unwrap()), &xi).unwrap();
        prop_assert!((before - after).abs() < 1e-11);
    }

    #[test]
    fn propagator_is_unitary(seed in any::<u64>(), n in 1usize..8, t in -5.0f64..5.0) {
        let mut r = rng(seed);
        let h = HermitianOperator::new(linalg::random_hermitian(&mut r, n)).unwrap();
        let u = unitary_propagator(&h, t, 1.0).unwrap();
        prop_assert!(max_abs(&(&u * u.adjoint() - CMatrix::identity(n, n))) < 1e-12);
    }

    #[test]
    fn trace_of_w_commutator_vanishes(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let w = linalg::random_matrix(&mut r, n, n);
        prop_assert!(linalg::commutator(&w, &w.adjoint()).trace().norm() < 1e-12);
    }

    #[test]
    fn w_evolution_commutes_with_density(seed in any::<u64>(), n in 2usize..6, m in 1usize..5, t in 0.0f64..2.0) {
        let mut r = rng(seed);
        let h = HermitianOperator::new(linalg::random_hermitian(&mut r, n)).unwrap();
        let w = WOperator::new(linalg::random_matrix(&mut r, n, m), 1.0).unwrap();
        let a = rho_from_w(&evolve_w(&w, &h, t).unwrap());
        let b = evolve_density(&rho_from_w(&w), &h, t, 1.0).unwrap();
        prop_assert!(max_abs(&(a.entries() - b.entries())) < 1e-11);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(
        coeffs in prop::collection::vec(-2.0f64..2.0, 6),
        dim in 2usize..4,
        periodic in any::<bool>(),
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let g = ParameterGrid::uniform(dim, 0.0, 1.0, 5, boundary).unwrap();
        let c = Cochain::from_node_fn(&g, |r| {
            coeffs[0] * (7.0 * r[0]).sin() + coeffs[1] * r[1] * r[1] + coeffs[2] * (r[0] * r[1]).cos()
                + coeffs[3] * r[2] + coeffs[4] * (3.0 * r[1] + r[2]).sin() + coeffs[5]
        }).unwrap();
        let dd = exterior_derivative(&exterior_derivative(&c).unwrap()).unwrap();
        prop_assert!(dd.max_abs() < 1e-12);
    }

    #[test]
    fn catalog_maps_are_symplectic(theta in -3.0f64..3.0, s in -1.0f64..1.0, q in -3.0f64..3.0, p in -3.0f64..3.0) {
        let inner = CanonicalMap::Kick { s };
        let outer = CanonicalMap::Rotation { theta }.then_after(&CanonicalMap::Drift { s: -s });
        let map = outer.then_after(&inner);
        prop_assert!(map.symplectic_defect(&PhasePoint::one(q, p)) < 1e-10);
    }

    #[test]
    fn verlet_is_time_reversible(q in -3.0f64..3.0, p in -3.0f64..3.0, dt in 0.01f64..0.5) {
        let h = HamiltonianSpec::harmonic();
        let z = PhasePoint::one(q, p);
        let back = step(&step(&z, &h, dt, Integrator::Verlet), &h, -dt, Integrator::Verlet);
        prop_assert!(back.distance(&z) < 1e-13);
    }

    #[test]
    fn fit_slope_recovers_power_laws(order in 0.5f64..5.0, c in 1e-3f64..1e3) {
        let h = [0.4f64, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|x| c * x.powf(order)).collect();
        prop_assert!((fit_slope(&h, &e).unwrap() - order).abs() < 1e-10);
    }

    #[test]
    fn ensemble_csv_round_trips(
        rows in prop::collection::vec((1e-6f64..10.0, -1e3f64..1e3, -1e3f64..1e3), 1..20)
    ) {
        let e = WeightedEnsemble::new(
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| PhasePoint::one(r.1, r.2)).collect(),
        ).unwrap();
        let mut buf = Vec::new();
        write_ensemble(&mut buf, &e).unwrap();
        prop_assert_eq!(read_ensemble(&buf[..]).unwrap(), e);
    }
}
