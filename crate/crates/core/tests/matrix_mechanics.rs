use cliffdyn::ensemble::GaugeConnection;
use cliffdyn::linalg::{c, max_abs, random_hermitian, CMat, C64};
use cliffdyn::matmech::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn commutator_exact_off_corner() {
    for n in [2, 4, 8, 16, 32] {
        let pair = build_truncated_pair(n, 1.0).unwrap();
        let comm = pair.commutator();
        for i in 0..n {
            for j in 0..n {
                let target = if (i, j) == (n - 1, n - 1) {
                    c(0.0, 1.0 - n as f64)
                } else if i == j {
                    c(0.0, 1.0)
                } else {
                    c(0.0, 0.0)
                };
                assert!((comm[(i, j)] - target).norm() < 1e-12, "n={n} ({i},{j})");
            }
        }
    }
}

#[test]
fn heisenberg_closed_form_on_interior_block() {
    let n = 64;
    let pair = build_truncated_pair(n, 1.0).unwrap();
    let m = 1.3;
    let series = heisenberg_evolve(&pair, m, (0.0, 0.5), 10, Propagator::Spectral).unwrap();
    for (tau, x) in series.taus.iter().zip(&series.x) {
        let exact = heisenberg_closed_form(&pair, m, *tau);
        assert!(block_deviation(x, &exact, n / 4) < 1e-8, "tau={tau}");
    }
    for p in &series.p {
        assert!(max_abs(&(p - &pair.p)) < 1e-12);
    }
}

#[test]
fn spectral_and_pade_propagators_agree() {
    let pair = build_truncated_pair(24, 0.8).unwrap();
    let a = heisenberg_evolve(&pair, 1.0, (0.0, 0.4), 4, Propagator::Spectral).unwrap();
    let b = heisenberg_evolve(&pair, 1.0, (0.0, 0.4), 4, Propagator::Pade).unwrap();
    for (x, y) in a.x.iter().zip(&b.x) {
        assert!(max_abs(&(x - y)) < 1e-9);
    }
}

#[test]
fn picture_equivalence_for_interior_states() {
    let n = 64;
    let k = 1.0;
    let m = 1.0;
    let pair = build_truncated_pair(n, k).unwrap();
    let h = free_hamiltonian(&pair, m);
    let s = StateVector::wavepacket(n, k, 0.5, 1.0);
    assert!(s.is_interior_supported());
    let schr = GaugeConnection::Schrodinger { hamiltonian: h.clone(), k };
    let states = evolve_state_series(&s, &schr, (0.0, 0.5), 50).unwrap();
    let heis = heisenberg_evolve(&pair, m, (0.0, 0.5), 50, Propagator::Spectral).unwrap();
    for (st, x) in states.iter().zip(&heis.x) {
        let a = expectation(&s, x).unwrap();
        let b = expectation(st, &pair.x).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn schrodinger_gauge_freezes_operators() {
    let pair = build_truncated_pair(16, 1.0).unwrap();
    let h = free_hamiltonian(&pair, 1.0);
    let g = PictureGauge::Schrodinger { hamiltonian: h.clone(), k: 1.0 };
    let x = evolve_operator(&pair.x, &h, 1.0, &g, 0.7);
    assert!(max_abs(&(x - &pair.x)) < 1e-12);
}

#[test]
fn constant_gauge_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_hermitian(&mut rng, 6);
    let s = StateVector::new(cliffdyn::linalg::random_gaussian_matrix(&mut rng, 6, 1).column(0).into_owned()).unwrap();
    let out = evolve_state(&s, &GaugeConnection::Constant(g.clone()), (0.0, 0.9), 1000).unwrap();
    let exact = s.apply(&(&g * C64::new(0.0, 0.9)).exp());
    assert!((out.amplitudes() - exact.amplitudes()).norm() < 1e-10);
    assert!((out.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn time_dependent_gauge_preserves_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_hermitian(&mut rng, 5);
    let b = random_hermitian(&mut rng, 5);
    let gamma = GaugeConnection::TimeDependent(std::sync::Arc::new(move |t: f64| {
        &a + &b * C64::new(t.sin(), 0.0)
    }));
    let s = StateVector::basis(5, 1);
    let states = evolve_state_series(&s, &gamma, (0.0, 3.0), 1000).unwrap();
    for st in &states {
        assert!((st.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn heisenberg_gauge_keeps_state() {
    let s = StateVector::basis(4, 2);
    let out = evolve_state(&s, &GaugeConnection::Zero, (0.0, 5.0), 10).unwrap();
    assert_eq!(out, s);
}

#[test]
fn ehrenfest_for_wavepackets() {
    let n = 64;
    let pair = build_truncated_pair(n, 1.0).unwrap();
    let s = StateVector::wavepacket(n, 1.0, 0.0, 1.5);
    for tau in [0.0, 0.1, 0.3, 0.5] {
        let chk = ehrenfest_check(&pair, &s, 1.0, tau, 0.5).unwrap();
        assert!(chk.residual < 1e-6);
        assert!((chk.commutator_expectation - chk.momentum_over_mass).abs() < 1e-8);
    }
}

#[test]
fn wavepacket_mean_position_is_linear() {
    let n = 64;
    let m = 2.0;
    let pair = build_truncated_pair(n, 1.0).unwrap();
    let s = StateVector::wavepacket(n, 1.0, 0.2, 1.0);
    let heis = heisenberg_evolve(&pair, m, (0.0, 0.5), 4, Propagator::Spectral).unwrap();
    let p = expectation(&s, &pair.p).unwrap();
    let x0 = expectation(&s, &pair.x).unwrap();
    for (tau, x) in heis.taus.iter().zip(&heis.x) {
        let got = expectation(&s, x).unwrap();
        assert!((got - (x0 + tau * p / m)).abs() < 1e-8);
    }
}

#[test]
fn equal_superposition_frequencies() {
    let pair = build_truncated_pair(6, 1.0).unwrap();
    let outcomes = born_distribution(&StateVector::basis(6, 0), &pair.x).unwrap();
    let (a, b) = (&outcomes[1].eigenspace, &outcomes[4].eigenspace);
    let s = StateVector::new((a.column(0) + b.column(0)).into_owned()).unwrap();
    let hist = sample_born(&s, &pair.x, 10_000, 99, 4).unwrap();
    let idx1 = 1;
    let idx2 = 4;
    let sigma = (10_000.0f64 * 0.25).sqrt();
    for i in [idx1, idx2] {
        assert!((hist.counts[i] as f64 - 5000.0).abs() < 3.0 * sigma);
    }
    assert_eq!(hist.counts.iter().sum::<u64>(), 10_000);
}

#[test]
fn born_sampling_is_deterministic_and_worker_merged() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pair = build_truncated_pair(8, 1.0).unwrap();
    let s = random_interior_state(&mut rng, 8, 6);
    let a = sample_born(&s, &pair.x, 5000, 11, 3).unwrap();
    let b = sample_born(&s, &pair.x, 5000, 11, 3).unwrap();
    assert_eq!(a, b);
    let test = chi_square(&a);
    assert!(test.p_value > 0.01, "{test:?}");
}

#[test]
fn degenerate_outcomes_are_grouped() {
    let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(1.0, 0.0),
        c(2.0, 0.0),
        c(1.0, 0.0),
    ]));
    let s = StateVector::new(nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let d = born_distribution(&s, &a).unwrap();
    assert_eq!(d.len(), 2);
    let one = d.iter().find(|o| (o.value - 1.0).abs() < 1e-12).unwrap();
    assert!((one.probability - 2.0 / 3.0).abs() < 1e-12);
    let meas = measure(&s, &a, 0).unwrap();
    let back = expectation(&meas.state, &a).unwrap();
    assert!((back - meas.value).abs() < 1e-12);
}

#[test]
fn lorentz_algebra_on_interior_block() {
    let r = spacetime_lorentz_residual(4, 1.0, -1.0).unwrap();
    assert!(r < 1e-8, "residual {r}");
    let opposite = spacetime_lorentz_residual(4, 1.0, 1.0).unwrap();
    assert!(opposite > 0.5, "opposite sign residual {opposite}");
}

#[test]
fn angular_momentum_is_conserved_on_interior() {
    let drift = angular_momentum_drift(16, 1.0, 1.0, 0.25, 3).unwrap();
    assert!(drift < 1e-7, "drift {drift}");
}

#[test]
fn nonrelativistic_limit() {
    let m = 1.0;
    for ratio in [1.0, 1.05] {
        let st = SpacetimePairs::new(48, 1.0, ratio * m).unwrap();
        let state = ProductState {
            factors: [
                StateVector::basis(48, 0),
                StateVector::wavepacket(48, 1.0, 0.3, 0.8),
                StateVector::wavepacket(48, 1.0, -0.2, -0.5),
                StateVector::wavepacket(48, 1.0, 0.0, 0.4),
            ],
        };
        assert!(state.is_interior_supported());
        let rep = nonrel_limit_check(&st, &state, m, 0.5, 10).unwrap();
        assert!((rep.dt_dtau_bar - ratio).abs() < 1e-8, "{rep:?}");
        assert!(rep.spatial_deviation < 1e-7, "{rep:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ehrenfest_slope_at_origin(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 48;
        let pair = build_truncated_pair(n, 1.0).unwrap();
        let s = random_interior_state(&mut rng, n, 8);
        let chk = ehrenfest_check(&pair, &s, 1.0, 0.0, 1.0).unwrap();
        prop_assert!(chk.residual < 1e-6);
        prop_assert!((chk.commutator_expectation - chk.momentum_over_mass).abs() < 1e-10);
    }

    #[test]
    fn born_probabilities_sum_to_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = build_truncated_pair(10, 1.0).unwrap();
        let s = random_interior_state(&mut rng, 10, 10);
        let total: f64 = born_distribution(&s, &pair.p).unwrap().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_expectation_is_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_interior_state(&mut rng, 7, 7);
        let e = expectation(&s, &CMat::identity(7, 7)).unwrap();
        prop_assert!((e - 1.0).abs() < 1e-12);
    }
}
