use cliffdyn::clifford::make_algebra;
use cliffdyn::particle::*;
use cliffdyn::spinor::{resolve_phase_point, FourVector, PhasePoint};
use cliffdyn::Error;
use proptest::prelude::*;

fn on_shell(m: f64, px: f64, py: f64, pz: f64) -> FourVector {
    FourVector::new((m * m + px * px + py * py + pz * pz).sqrt(), px, py, pz)
}

fn start(x: FourVector, p: FourVector, mu0: f64) -> PhasePoint {
    resolve_phase_point(&x, &p, mu0, &make_algebra(5).unwrap()).unwrap()
}

#[test]
fn position_follows_the_einbein_integral() {
    let (m, mu0) = (1.3, 0.4);
    let x0 = FourVector::new(0.2, -1.0, 0.5, 0.3);
    let p = on_shell(m, 0.3, -0.2, 0.6);
    let (a, b) = (0.8, 0.25);
    let e = EinbeinProfile::Linear { intercept: a, slope: b };
    let traj = evolve(&start(x0, p, mu0), &e, m, (0.0, 3.0), 60).unwrap();
    for s in &traj.samples {
        let big_e = a * s.tau + 0.5 * b * s.tau * s.tau;
        let want = x0 + p.scale(2.0 * big_e * mu0 + m * m * big_e * big_e);
        assert!(s.x.max_abs_diff(&want) < 1e-11, "tau = {}", s.tau);
        assert!((s.mu - (mu0 + m * m * big_e)).abs() < 1e-11);
        assert!(s.p.max_abs_diff(&p) < 1e-11);
    }
}

#[test]
fn at_rest_from_the_origin() {
    let traj = evolve(
        &start(FourVector::default(), FourVector::new(1.0, 0.0, 0.0, 0.0), 0.0),
        &EinbeinProfile::constant(0.5),
        1.0,
        (0.0, 2.0),
        8,
    )
    .unwrap();
    for s in &traj.samples {
        let want = FourVector::new(s.tau * s.tau / 4.0, 0.0, 0.0, 0.0);
        assert!(s.x.max_abs_diff(&want) < 1e-13);
    }
}

#[test]
fn zero_momentum_leaves_the_state_fixed() {
    let x0 = FourVector::new(1.0, 0.5, 0.0, -0.2);
    let pp = start(x0, FourVector::default(), 0.7);
    let traj = evolve(&pp, &EinbeinProfile::constant(1.0), 1.0, (0.0, 5.0), 10).unwrap();
    assert!(!traj.on_shell);
    for s in &traj.samples {
        assert!(s.state.c.sub(&pp.c).coeff_norm() < 1e-13);
        assert!(s.x.max_abs_diff(&x0) < 1e-13);
        assert!((s.mu - 0.7).abs() < 1e-13);
    }
}

#[test]
fn position_is_linear_in_proper_time() {
    let m = 2.0;
    let p = on_shell(m, 0.5, 0.1, -0.4);
    let x0 = FourVector::new(-0.3, 0.2, 0.0, 1.0);
    let traj = evolve(&start(x0, p, 0.5), &EinbeinProfile::constant(0.3), m, (0.0, 4.0), 80).unwrap();
    let traj = proper_time_reparametrize(&traj).unwrap();
    for s in &traj.samples {
        let want = x0 + p.scale(s.tau_bar.unwrap() / m);
        assert!(s.x.max_abs_diff(&want) < 1e-10);
    }
    let w = &traj.samples[40..42];
    let slope = (w[1].x - w[0].x).scale(1.0 / (w[1].tau_bar.unwrap() - w[0].tau_bar.unwrap()));
    assert!(slope.max_abs_diff(&p.scale(1.0 / m)) < 1e-9);
    for tb in [0.1, 1.7, 5.0] {
        let exact = traj.x_on_tau_bar(tb).unwrap();
        assert!(exact.max_abs_diff(&(x0 + p.scale(tb / m))) < 1e-9);
    }
}

#[test]
fn turning_point_from_negative_mu() {
    let p = on_shell(1.0, 0.0, 0.0, 0.0);
    let traj = evolve(&start(FourVector::default(), p, -1.0), &EinbeinProfile::constant(1.0), 1.0, (0.0, 2.5), 25).unwrap();
    let t0 = turning_point(&traj).unwrap();
    assert!((t0 - 1.0).abs() < 1e-10);
    assert!(double_cover_residual(&traj, 1.0, &[0.1, 0.5, 1.0]) < 1e-13);
    assert!(double_cover_residual(&traj, t0, &[0.1, 0.5, 1.0]) < 1e-10);
    assert!(matches!(proper_time_reparametrize(&traj), Err(Error::TurningPoint { .. })));
    assert!(traj.tau_at_tau_bar(0.1).is_none());
}

#[test]
fn turning_point_under_a_growing_einbein() {
    // e = tau gives E = (tau^2 - 0.01) / 2 from tau = 0.1, so mu = -0.48 + E
    // vanishes at tau^2 = 0.97.
    let p = on_shell(1.0, 0.0, 0.0, 0.0);
    let e = EinbeinProfile::Linear { intercept: 0.0, slope: 1.0 };
    let traj = evolve(&start(FourVector::default(), p, -0.48), &e, 1.0, (0.1, 1.0), 90).unwrap();
    let t0 = turning_point(&traj).unwrap();
    assert!((t0 - 0.97f64.sqrt()).abs() < 1e-10);
    let traj = evolve(&start(FourVector::default(), p, -0.12), &e, 1.0, (0.1, 1.0), 90).unwrap();
    assert!((turning_point(&traj).unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn rk4_tracks_the_exact_solution() {
    let m = 1.0;
    let p = on_shell(m, 0.4, 0.0, 0.2);
    let pp = start(FourVector::new(0.0, 1.0, 0.0, 0.0), p, 0.2);
    let e = EinbeinProfile::Linear { intercept: 1.0, slope: 0.5 };
    let exact = evolve(&pp, &e, m, (0.0, 2.0), 200).unwrap();
    let rk = evolve_rk4(&pp, &e, m, (0.0, 2.0), 200).unwrap();
    for (a, b) in exact.samples.iter().zip(&rk.samples) {
        assert!(a.x.max_abs_diff(&b.x) < 1e-10);
        assert!((a.mu - b.mu).abs() < 1e-10);
    }
}

#[test]
fn nonpositive_einbein_window_rejected() {
    let pp = start(FourVector::default(), on_shell(1.0, 0.0, 0.0, 0.0), 0.0);
    let e = EinbeinProfile::Linear { intercept: 1.0, slope: -1.0 };
    assert!(matches!(evolve(&pp, &e, 1.0, (0.0, 2.0), 4), Err(Error::Domain(_))));
    assert!(evolve(&pp, &e, 1.0, (0.0, 0.9), 4).is_ok());
    assert!(evolve(&pp, &EinbeinProfile::constant(1.0), 0.0, (0.0, 1.0), 4).is_err());
}

fn sample_velocity(m: f64) -> cliffdyn::spinor::SpinorField {
    let pp = start(FourVector::new(0.1, 0.2, -0.3, 0.4), on_shell(m, 0.6, -0.2, 0.3), 0.9);
    let mut dc = hamiltonian_velocity(&pp, 1.0);
    dc.axpy(cliffdyn::linalg::C64::new(0.3, 0.1), &pp.c);
    dc
}

#[test]
fn quartic_lagrangian_is_homogeneous_of_degree_one() {
    let m = 1.7;
    let dc = sample_velocity(m);
    let l = quartic_lagrangian(&dc, m).unwrap();
    for lambda in [0.5, 2.0, 3.7] {
        let scaled = dc.scale(cliffdyn::linalg::C64::new(lambda, 0.0));
        assert!((quartic_lagrangian(&scaled, m).unwrap() - lambda * l).abs() < 1e-10 * l);
        let d1 = quartic_momenta(&dc, m).unwrap();
        let d2 = quartic_momenta(&scaled, m).unwrap();
        assert!(d1.sub(&d2).coeff_norm() < 1e-10 * d1.coeff_norm());
    }
    let d = quartic_momenta(&dc, m).unwrap();
    assert!(legendre_hamiltonian(&d, &dc, l).abs() < 1e-10 * l);
}

#[test]
fn quartic_momenta_lie_on_the_mass_shell() {
    for m in [0.5, 1.0, 2.5] {
        let dc = sample_velocity(m);
        let d_star = quartic_momenta(&dc, m).unwrap();
        let ctx = make_algebra(5).unwrap();
        let pp = PhasePoint { c: cliffdyn::spinor::SpinorField::zero(&ctx), d_star };
        assert!((pp.p().norm2() - m * m).abs() < 1e-10 * m * m);
    }
}

#[test]
fn einbein_lagrangian_reduces_to_the_quartic_on_shell() {
    let m = 1.2;
    let dc = sample_velocity(m);
    let e = on_shell_einbein(&dc, m).unwrap();
    let poly = polyakov_lagrangian(&dc, e, m).unwrap();
    let quartic = quartic_lagrangian(&dc, m).unwrap();
    assert!((poly - quartic).abs() < 1e-10 * quartic);
    let h = 1e-4;
    let de = (polyakov_lagrangian(&dc, e + h, m).unwrap() - polyakov_lagrangian(&dc, e - h, m).unwrap()) / (2.0 * h);
    assert!(de.abs() < 1e-6);
    let a = polyakov_momenta(&dc, e).unwrap();
    let b = quartic_momenta(&dc, m).unwrap();
    assert!(a.sub(&b).coeff_norm() < 1e-10 * b.coeff_norm());
}

#[test]
fn charges_are_constant_along_an_exact_run() {
    let m = 1.0;
    let pp = start(FourVector::new(0.3, 0.0, 1.0, 0.0), on_shell(m, 0.2, 0.7, 0.0), -0.2);
    let traj = evolve(&pp, &EinbeinProfile::constant(1.0), m, (0.0, 1.0), 20).unwrap();
    let first = traj.samples[0].noether;
    for s in &traj.samples {
        assert!((s.noether.j_ab - first.j_ab).iter().all(|z| z.norm() < 1e-12));
        assert!((s.noether.j - first.j).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_run_keeps_shell_and_charges(
        m in 0.2f64..3.0,
        k in prop::array::uniform3(-2.0f64..2.0),
        x in prop::array::uniform4(-2.0f64..2.0),
        mu0 in -2.0f64..2.0,
        e in 0.1f64..2.0,
    ) {
        let p = on_shell(m, k[0], k[1], k[2]);
        let traj = evolve(&start(FourVector(x), p, mu0), &EinbeinProfile::constant(e), m, (0.0, 2.0), 16).unwrap();
        let first = traj.samples[0].noether;
        let scale = 1.0 + p.max_abs().powi(2);
        for s in &traj.samples {
            prop_assert!(s.mass_shell_residual < 1e-9 * scale);
            prop_assert!((s.noether.j - first.j).abs() < 1e-9 * scale * (1.0 + s.x.max_abs()));
            let big_e = e * s.tau;
            prop_assert!((s.mu - (mu0 + m * m * big_e)).abs() < 1e-9 * scale * (1.0 + big_e));
        }
    }
}
