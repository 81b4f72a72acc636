use cliffdyn::ensemble::*;
use cliffdyn::linalg::{c, hermitian_eigen_desc, max_abs, random_hermitian, random_unitary, CMat};
use cliffdyn::particle::{evolve, EinbeinProfile};
use cliffdyn::spinor::{resolve_phase_point, FourVector};
use cliffdyn::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn on_shell(m: f64, px: f64, py: f64, pz: f64) -> FourVector {
    FourVector::new((m * m + px * px + py * py + pz * pz).sqrt(), px, py, pz)
}

fn specs() -> Vec<ParticleSpec> {
    vec![
        ParticleSpec { x: FourVector::new(0.0, 1.0, 0.0, 0.0), p: on_shell(1.0, 0.2, 0.0, 0.0), mu: 0.3 },
        ParticleSpec { x: FourVector::new(0.5, -1.0, 0.4, 0.0), p: on_shell(1.0, 0.0, -0.5, 0.1), mu: 0.6 },
        ParticleSpec { x: FourVector::new(-0.2, 0.0, 0.0, 2.0), p: on_shell(1.0, -0.3, 0.3, 0.0), mu: 1.1 },
    ]
}

fn ensemble(phi: CMat) -> EnsembleState {
    EnsembleState::resolve(&specs(), phi).unwrap()
}

#[test]
fn time_spectrum_survives_any_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let state = ensemble(CMat::identity(3, 3));
    let (before, _) = hermitian_eigen_desc(&state.observables().x[0]);
    let mut want: Vec<f64> = specs().iter().map(|s| s.x.0[0]).collect();
    want.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in before.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
    for _ in 0..5 {
        let u = random_unitary(&mut rng, 3);
        let (after, _) = hermitian_eigen_desc(&state.apply_gauge(&u).unwrap().observables().x[0]);
        for (a, b) in after.iter().zip(&before) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn permutation_gauge_permutes_the_tracks() {
    let state = ensemble(CMat::identity(3, 3));
    let perm = [2usize, 0, 1];
    let u = CMat::from_fn(3, 3, |i, j| if perm[i] == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let moved = state.apply_gauge(&u).unwrap();
    let x1 = &moved.observables().x[1];
    for (i, &j) in perm.iter().enumerate() {
        assert!((x1[(i, i)].re - specs()[j].x.0[1]).abs() < 1e-12);
    }
    let back = gauge_back(&moved.observables(), 1e-8).unwrap();
    for s in specs() {
        let hit = back.tracks.iter().any(|t| t.x.max_abs_diff(&s.x) < 1e-9 && t.p.max_abs_diff(&s.p) < 1e-9);
        assert!(hit, "particle at {:?} not recovered", s.x);
    }
}

#[test]
fn gauge_back_on_diagonal_input_is_a_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let state = ensemble(CMat::identity(3, 3));
    let scrambled = state.apply_gauge(&random_unitary(&mut rng, 3)).unwrap();
    let g = gauge_back(&state.observables(), 1e-8).unwrap();
    for i in 0..3 {
        let row_max = (0..3).map(|j| g.unitary[(i, j)].norm()).fold(0.0, f64::max);
        assert!((row_max - 1.0).abs() < 1e-10);
    }
    let h = gauge_back(&scrambled.observables(), 1e-8).unwrap();
    assert!(h.residual < 1e-9);
}

#[test]
fn identity_weights_sum_the_single_particle_actions() {
    let e = EinbeinProfile::Linear { intercept: 0.5, slope: 0.2 };
    let span = (0.0, 1.5);
    let whole = ensemble(CMat::identity(3, 3)).action_value(&e, 1.0, span, 40).unwrap();
    let parts: f64 = specs()
        .iter()
        .map(|s| {
            EnsembleState::resolve(&[*s], CMat::identity(1, 1))
                .unwrap()
                .action_value(&e, 1.0, span, 40)
                .unwrap()
        })
        .sum();
    assert!((whole - parts).abs() < 1e-10 * (1.0 + parts.abs()));
    let zero = ensemble(CMat::zeros(3, 3)).action_value(&e, 1.0, span, 40).unwrap();
    assert_eq!(zero, 0.0);
}

#[test]
fn covariant_derivative_without_and_with_a_connection() {
    let a = CMat::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64 - 0.5));
    let quad = |t: f64| &a * c(t * t, 0.0);
    let d = covariant_derivative(&quad, &GaugeConnection::Zero, 0.7, 1e-3);
    assert!(max_abs(&(d - &a * c(1.4, 0.0))) < 1e-10);

    let gamma = CMat::from_fn(2, 2, |i, j| if i == j { c(0.3, 0.0) } else { c(0.1, -0.2 + 0.4 * i as f64) });
    let fixed = |_: f64| a.clone();
    let d = covariant_derivative(&fixed, &GaugeConnection::Constant(gamma.clone()), 0.0, 1e-3);
    let want = &gamma * &a * c(0.0, -1.0);
    assert!(max_abs(&(d - want)) < 1e-14);
}

#[test]
fn noncommuting_truncated_pair_is_not_gaugeable() {
    let n = 4;
    let lower = CMat::from_fn(n, n, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { c(0.0, 0.0) });
    let x = (&lower + lower.adjoint()) * c(0.5f64.sqrt(), 0.0);
    let p = (lower.adjoint() - &lower) * c(0.0, 0.5f64.sqrt());
    let zero = CMat::zeros(n, n);
    let obs = MatrixObservables {
        x: [zero.clone(), x, zero.clone(), zero.clone()],
        p_lower: [CMat::identity(n, n), p, zero.clone(), zero],
    };
    assert!(matches!(gauge_back(&obs, 1e-8), Err(Error::NotGaugeable { .. })));
}

#[test]
fn commuting_observables_close_the_lorentz_algebra_at_zero_k() {
    let obs = ensemble(CMat::identity(3, 3)).observables();
    let j = angular_tensor(&obs);
    assert!(so13_residual(&j, 0.0, None) < 1e-10);
    for mu in 0..4 {
        assert!(max_abs(j.get(mu, mu)) < 1e-12);
        for nu in 0..4 {
            assert!(max_abs(&(j.get(mu, nu) + j.get(nu, mu))) < 1e-12);
        }
    }
}

#[test]
fn ensemble_charges_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let phi = random_hermitian(&mut rng, 3);
        let state = ensemble(phi).apply_gauge(&random_unitary(&mut rng, 3)).unwrap();
        let (j_ab, j) = state.noether_matrices();
        for row in &j_ab {
            for m in row {
                assert!(max_abs(m) < 1e-10);
            }
        }
        assert!(max_abs(&j) < 1e-10);
        let (q_ab, q) = state.ensemble_charges();
        assert!(q_ab.iter().flatten().all(|z| z.norm() < 1e-10));
        assert!(q.norm() < 1e-10);
    }
}

#[test]
fn advance_matches_each_particle_run() {
    let state = ensemble(CMat::identity(3, 3));
    let big_e = 0.8;
    let moved = state.advance(big_e);
    for (i, s) in specs().iter().enumerate() {
        let alone = resolve_phase_point(&s.x, &s.p, s.mu, &cliffdyn::clifford::make_algebra(5).unwrap()).unwrap();
        let traj = evolve(&alone, &EinbeinProfile::constant(1.0), 1.0, (0.0, big_e), 1).unwrap();
        let end = traj.samples.last().unwrap();
        let got = moved.particle(i);
        assert!(got.x().max_abs_diff(&end.x) < 1e-10);
        assert!(got.p().max_abs_diff(&end.p) < 1e-10);
        assert!((got.mu() - end.mu).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_commutes_with_gauge(seed in any::<u64>(), big_e in -1.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = ensemble(random_hermitian(&mut rng, 3));
        let u = random_unitary(&mut rng, 3);
        let a = state.advance(big_e).apply_gauge(&u).unwrap().observables();
        let b = state.apply_gauge(&u).unwrap().advance(big_e).observables();
        prop_assert!(a.max_abs_diff(&b) < 1e-9);
        let direct = state.advance(big_e).observables().conjugate_by(&u);
        prop_assert!(a.max_abs_diff(&direct) < 1e-9);
    }

    #[test]
    fn action_is_gauge_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = ensemble(random_hermitian(&mut rng, 3));
        let u = random_unitary(&mut rng, 3);
        let e = EinbeinProfile::constant(0.7);
        let s0 = state.action_value(&e, 1.0, (0.0, 1.0), 10).unwrap();
        let s1 = state.apply_gauge(&u).unwrap().action_value(&e, 1.0, (0.0, 1.0), 10).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-9 * (1.0 + s0.abs()));
    }
}
