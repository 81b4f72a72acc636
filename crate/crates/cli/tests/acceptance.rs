//! Acceptance criteria 1-9. Runs as a plain binary and prints one PASS/FAIL
//! line per criterion; exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cliffdyn::clifford::make_algebra;
use cliffdyn::ensemble::GaugeConnection;
use cliffdyn::linalg::{random_hermitian, C64};
use cliffdyn::matmech::{
    block_deviation, build_truncated_pair, chi_square, ehrenfest_check, evolve_state_series,
    expectation, free_hamiltonian, heisenberg_closed_form, heisenberg_evolve, random_interior_state,
    sample_born, spacetime_lorentz_residual, Propagator, StateVector,
};
use cliffdyn::particle::{double_cover_residual, evolve, linear_family_start, EinbeinProfile};
use cliffdyn::spinor::{four_vector_rule_residual, FourVector, HermitianSpinor, Spinor2};
use cliffdyn::string::{
    identity_report, induced_geometry, linspace, multimomenta, reduced_evolve, SliceNode, SmoothField,
};
use cliffdyn::verify::{
    ensemble_invariance, gauge_back_round_trip, inner_vs_multivector, particle_drifts,
    reparametrization_residual, resolution_residuals, DEFAULT_SEED,
};

/// One measured quantity and the bound it must stay strictly below.
struct Measure {
    label: &'static str,
    value: f64,
    bound: f64,
}

impl Measure {
    fn new(label: &'static str, value: f64, bound: f64) -> Self {
        Measure { label, value, bound }
    }

    fn ok(&self) -> bool {
        self.value.is_finite() && self.value < self.bound
    }
}

type Outcome = Result<Vec<Measure>, String>;

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    r.set_stream(100 + stream);
    r
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn hermitian_resolution() -> Outcome {
    let mut r = rng(1);
    let (res, secs) = timed(|| resolution_residuals(&mut r, 6, 200));
    let (gram, plain) = res.map_err(err)?;
    Ok(vec![
        Measure::new("gram", gram, 1e-10),
        Measure::new("unstarred", plain, 1e-10),
        Measure::new("seconds", secs, 10.0),
    ])
}

fn algebra_cross_validation() -> Outcome {
    let mut r = rng(2);
    let (res, secs) = timed(|| inner_vs_multivector(&mut r, 1000));
    Ok(vec![
        Measure::new("inner_vs_anticommutator", res.map_err(err)?, 1e-12),
        Measure::new("seconds", secs, 5.0),
    ])
}

fn four_vector_rule() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = random_hermitian(&mut r, 2);
        let s = HermitianSpinor::new(Spinor2::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)])).map_err(err)?;
        worst = worst.max(four_vector_rule_residual(&s));
    }
    Ok(vec![Measure::new("rule", worst, 1e-12)])
}

fn particle_dynamics() -> Outcome {
    let mut r = rng(4);
    let d = particle_drifts(&mut r, 1000).map_err(err)?;
    let ctx = make_algebra(5).map_err(err)?;
    let mut cover: f64 = 0.0;
    for p in [
        FourVector::new(1.0, 0.0, 0.0, 0.0),
        FourVector::new(1.5, 0.6, -0.8, 0.5),
        FourVector::new(2.0, 0.0, 1.2, -1.0),
    ] {
        let start = linear_family_start(&p, &ctx).map_err(err)?;
        let m = p.norm2().sqrt();
        let traj = evolve(&start, &EinbeinProfile::constant(0.7), m, (0.0, 1.0), 10).map_err(err)?;
        cover = cover.max(double_cover_residual(&traj, 0.0, &linspace(0.0, 3.0, 31)));
    }
    Ok(vec![
        Measure::new("mass_shell_drift", d[0], 1e-9),
        Measure::new("noether_drift", d[1], 1e-9),
        Measure::new("mu_closed_form", d[2], 1e-9),
        Measure::new("exact_vs_rk4", d[3], 1e-8),
        Measure::new("double_cover", cover, 1e-10),
    ])
}

fn reparametrization() -> Outcome {
    let mut r = rng(5);
    let v = reparametrization_residual(&mut r, 1000).map_err(err)?;
    Ok(vec![Measure::new("x_of_tau_bar", v, 1e-7)])
}

fn ensemble_suite() -> Outcome {
    let mut r = rng(6);
    let (action, noether) = ensemble_invariance(&mut r, 8, 50).map_err(err)?;
    let (residual, tracks) = gauge_back_round_trip(&mut r, 8).map_err(err)?;
    Ok(vec![
        Measure::new("action_invariance", action, 1e-9),
        Measure::new("noether_matrices", noether, 1e-10),
        Measure::new("gauge_back_residual", residual, 1e-7),
        Measure::new("track_recovery", tracks, 1e-7),
    ])
}

fn matrix_mechanics() -> Outcome {
    let mut r = rng(7);
    let mut off_corner: f64 = 0.0;
    for n in [2, 4, 8, 16, 32] {
        let c = build_truncated_pair(n, 1.0).map_err(err)?.commutator();
        for i in 0..n {
            for j in 0..n {
                if i == n - 1 && j == n - 1 {
                    continue;
                }
                let want = if i == j { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
                off_corner = off_corner.max((c[(i, j)] - want).norm());
            }
        }
    }

    let n = 64;
    let m = 1.0;
    let pair = build_truncated_pair(n, 1.0).map_err(err)?;
    let heis = heisenberg_evolve(&pair, m, (0.0, 0.5), 20, Propagator::Spectral).map_err(err)?;
    let closed = heis
        .taus
        .iter()
        .zip(&heis.x)
        .map(|(t, x)| block_deviation(x, &heisenberg_closed_form(&pair, m, *t), n / 4))
        .fold(0.0, f64::max);

    let packet = StateVector::wavepacket(n, 1.0, 0.3, 0.8);
    let gamma = GaugeConnection::Schrodinger {
        hamiltonian: free_hamiltonian(&pair, m),
        k: 1.0,
    };
    let states = evolve_state_series(&packet, &gamma, (0.0, 0.5), 20).map_err(err)?;
    let mut pictures: f64 = 0.0;
    for (s, (x, p)) in states.iter().zip(heis.x.iter().zip(&heis.p)) {
        pictures = pictures
            .max((expectation(&packet, x).map_err(err)? - expectation(s, &pair.x).map_err(err)?).abs())
            .max((expectation(&packet, p).map_err(err)? - expectation(s, &pair.p).map_err(err)?).abs());
    }

    let interior = random_interior_state(&mut r, n, 12);
    let mut ehrenfest: f64 = 0.0;
    for tau in [0.0, 0.1, 0.25, 0.4] {
        ehrenfest = ehrenfest.max(ehrenfest_check(&pair, &interior, m, tau, 0.5).map_err(err)?.residual);
    }

    let hist = sample_born(&interior, &pair.x, 10_000, DEFAULT_SEED, 4).map_err(err)?;
    let p_value = chi_square(&hist).p_value;

    let lorentz = spacetime_lorentz_residual(4, 1.0, -1.0).map_err(err)?;
    Ok(vec![
        Measure::new("commutator_off_corner", off_corner, 1e-12),
        Measure::new("heisenberg_closed_form", closed, 1e-8),
        Measure::new("picture_equivalence", pictures, 1e-8),
        Measure::new("ehrenfest", ehrenfest, 1e-6),
        Measure::new("born_one_minus_p", 1.0 - p_value, 0.99),
        Measure::new("so13_interior", lorentz, 1e-8),
    ])
}

fn worldsheet_identities() -> Outcome {
    let ctx = make_algebra(3).map_err(err)?;
    let grid = SmoothField::random(&ctx, 1).grid(&ctx, 32, 32).map_err(err)?;
    let geom = induced_geometry(&grid).map_err(err)?;
    let mm = multimomenta(&grid, &geom).map_err(err)?;
    let ids = identity_report(&grid, &geom, &mm, 0.8, 1.0);

    let m = 1.3;
    let sigmas = linspace(0.0, 1.0, 12);
    let slice: Vec<SliceNode> = sigmas
        .iter()
        .map(|&s| {
            let (px, py, pz) = (0.3 * s, -0.2, 0.5 * s * s);
            SliceNode {
                x: FourVector::new(0.0, s.cos(), s.sin(), 0.2 * s),
                p: FourVector::new((m * m + px * px + py * py + pz * pz).sqrt(), px, py, pz),
                mu: 0.6 + 0.4 * s,
            }
        })
        .collect();
    let rep = reduced_evolve(&slice, sigmas, m, 1.0, 1000)
        .and_then(|s| s.verify())
        .map_err(err)?;
    Ok(vec![
        Measure::new("hermiticity", geom.hermiticity_residual(), 1e-12),
        Measure::new("recomposition", geom.recomposition_residual(), 1e-12),
        Measure::new("momentum_square", ids.momentum_square, 1e-8),
        Measure::new("pairing", ids.pairing, 1e-8),
        Measure::new("reduced_columns", rep.column_deviation, 1e-8),
        Measure::new("mass_shell", rep.mass_shell_residual, 1e-6),
        Measure::new("mass_shell_from_trace", rep.trace_residual, 1e-6),
    ])
}

fn run_binary(args: &[&str], out: &Path) -> Result<Duration, String> {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_cliffdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(err)?;
    if !status.status.success() {
        return Err(format!(
            "{} exited with {:?}: {}",
            args.join(" "),
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    Ok(t.elapsed())
}

fn same_bytes(a: &Path, b: &Path) -> Result<f64, String> {
    let x = std::fs::read(a).map_err(err)?;
    let y = std::fs::read(b).map_err(err)?;
    Ok(if x == y { 0.0 } else { 1.0 })
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn end_to_end() -> Outcome {
    let dirs: Vec<tempfile::TempDir> = (0..4).map(|_| tempfile::tempdir()).collect::<Result<_, _>>().map_err(err)?;
    let first = run_binary(&["verify"], dirs[0].path())?;
    let second = run_binary(&["verify"], dirs[1].path())?;
    let report_diff = same_bytes(&dirs[0].path().join("report.json"), &dirs[1].path().join("report.json"))?;

    let cfg = configs().join("string.json");
    let cfg = cfg.to_str().ok_or("config path is not UTF-8")?;
    run_binary(&["string", "--config", cfg], dirs[2].path())?;
    run_binary(&["string", "--config", cfg], dirs[3].path())?;
    let mut csv_diff: f64 = 0.0;
    for name in ["worldsheet.csv", "reduced.csv", "report.json"] {
        csv_diff = csv_diff.max(same_bytes(&dirs[2].path().join(name), &dirs[3].path().join(name))?);
    }
    Ok(vec![
        Measure::new("verify_seconds", first.max(second).as_secs_f64(), 300.0),
        Measure::new("report_differs", report_diff, 0.5),
        Measure::new("outputs_differ", csv_diff, 0.5),
    ])
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("hermitian resolution", hermitian_resolution),
        ("algebra cross-validation", algebra_cross_validation),
        ("four-vector rule", four_vector_rule),
        ("particle dynamics", particle_dynamics),
        ("reparametrization invariance", reparametrization),
        ("U(N) ensemble", ensemble_suite),
        ("matrix mechanics", matrix_mechanics),
        ("worldsheet identities", worldsheet_identities),
        ("end-to-end verify", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let line = match f() {
            Ok(ms) => {
                let ok = ms.iter().all(Measure::ok);
                let detail: Vec<String> = ms
                    .iter()
                    .map(|m| format!("{}={:.3e}<{:e}{}", m.label, m.value, m.bound, if m.ok() { "" } else { "!" }))
                    .collect();
                if !ok {
                    failed += 1;
                }
                format!("{} criterion {}: {name} [{}]", if ok { "PASS" } else { "FAIL" }, i + 1, detail.join(", "))
            }
            Err(e) => {
                failed += 1;
                format!("FAIL criterion {}: {name} [error: {e}]", i + 1)
            }
        };
        println!("{line}");
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
