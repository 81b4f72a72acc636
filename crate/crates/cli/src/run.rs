//! One pipeline per command. Each returns its check records and writes its
//! artifacts through the output directory.

use anyhow::{anyhow, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cliffdyn::clifford::make_algebra;
use cliffdyn::ensemble::{gauge_back, track_series, write_tracks_csv, EnsembleState, FrameRecord};
use cliffdyn::export::{csv_writer, fmt_float};
use cliffdyn::linalg::{max_abs, random_unitary, CMat};
use cliffdyn::matmech::{
    block_deviation, born_distribution, build_truncated_pair, chi_square, expectation_trace,
    heisenberg_closed_form, heisenberg_evolve, nonrel_limit_check, sample_born, write_trace_csv,
    BornHistogram, ChiSquareTest, ProductState, Propagator, SpacetimePairs, StateVector,
};
use cliffdyn::particle::{evolve, evolve_rk4, proper_time_reparametrize};
use cliffdyn::spinor::{resolve_hermitian, resolve_phase_point, PAIRS_PER_PARTICLE};
use cliffdyn::string::{
    identity_report, induced_geometry, linspace, momentum_field, multimomenta, noether_report,
    reduced_evolve, write_worldsheet_csv, IdentityReport, NoetherReport, ReducedReport, SmoothField,
    WorldsheetHeader,
};
use cliffdyn::verify::{resolution_residuals, verify_all, CheckRecord};

use crate::config::{
    EnsembleConfig, Integrator, MatmechConfig, ParticleConfig, ResolveConfig, StringConfig,
    VerifyConfig,
};
use crate::report::{Checks, OutDir};

/// Attempts at drawing a random field with a definite worldsheet metric.
const FIELD_DRAWS: usize = 8;

pub fn resolve(cfg: &ResolveConfig, seed: u64, out: &mut OutDir) -> Result<Vec<CheckRecord>> {
    let mut checks = Checks::new("resolve");
    if let Some(spec) = &cfg.hermitian {
        let h = spec.to_matrix();
        let n = h.nrows();
        let ctx = make_algebra(n)?;
        let cs = resolve_hermitian(&h, &ctx).context("resolving the Hermitian matrix")?;
        let scale = 1.0 + max_abs(&h);
        let mut starred: f64 = 0.0;
        let mut plain: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                starred = starred.max((cs[i].dot_conj(&cs[j]) - h[(i, j)]).norm());
                plain = plain.max(cs[i].dot(&cs[j]).norm());
            }
        }
        checks.check("hermitian_gram", 1e-10, Ok(starred / scale));
        checks.check("hermitian_unstarred", 1e-10, Ok(plain / scale));
        out.write("resolved.csv", |w| {
            let mut wr = csv_writer(w);
            wr.write_record(["vector", "generator", "re", "im"])?;
            for (i, c) in cs.iter().enumerate() {
                for (k, z) in c.coeffs().iter().enumerate() {
                    wr.write_record([i.to_string(), k.to_string(), fmt_float(z.re), fmt_float(z.im)])?;
                }
            }
            wr.flush()?;
            Ok(())
        })?;
    }
    if !cfg.phase_points.is_empty() {
        let ctx = make_algebra(PAIRS_PER_PARTICLE)?;
        let mut points = Vec::with_capacity(cfg.phase_points.len());
        let mut worst: f64 = 0.0;
        for (i, s) in cfg.phase_points.iter().enumerate() {
            let pp = resolve_phase_point(&s.x, &s.p, s.mu, &ctx)
                .with_context(|| format!("resolving phase point {i}"))?;
            let scale = 1.0 + s.x.max_abs() + s.p.max_abs() + s.mu.abs();
            worst = worst
                .max(pp.x().max_abs_diff(&s.x) / scale)
                .max(pp.p().max_abs_diff(&s.p) / scale)
                .max((pp.mu() - s.mu).abs() / scale);
            points.push(pp);
        }
        let noether = points
            .iter()
            .zip(&cfg.phase_points)
            .map(|(pp, s)| pp.noether_condition_residual() / (1.0 + s.mu.abs()))
            .fold(0.0, f64::max);
        checks.check("phase_point_recovery", 1e-12, Ok(worst));
        checks.check("phase_point_noether_condition", 1e-12, Ok(noether));
        out.write("phase_points.csv", |w| {
            let mut wr = csv_writer(w);
            wr.write_record([
                "point", "x0", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "mu", "noether_residual",
            ])?;
            for (i, pp) in points.iter().enumerate() {
                let mut rec = vec![i.to_string()];
                rec.extend(pp.x().0.iter().chain(pp.p().0.iter()).map(|v| fmt_float(*v)));
                rec.push(fmt_float(pp.mu()));
                rec.push(fmt_float(pp.noether_condition_residual()));
                wr.write_record(&rec)?;
            }
            wr.flush()?;
            Ok(())
        })?;
    }
    if let Some(r) = &cfg.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = resolution_residuals(&mut rng, r.n, r.count);
        let (a, b) = match res {
            Ok((a, b)) => (Ok(a), Ok(b)),
            Err(e) => (Err(cliffdyn::Error::Validation(e.to_string())), Err(e)),
        };
        checks.check("random_gram", 1e-10, a);
        checks.check("random_unstarred", 1e-10, b);
    }
    Ok(checks.records)
}

pub fn particle(cfg: &ParticleConfig, out: &mut OutDir) -> Result<Vec<CheckRecord>> {
    let ctx = make_algebra(PAIRS_PER_PARTICLE)?;
    let p = cfg.momentum();
    let start = resolve_phase_point(&cfg.x, &p, cfg.mu0, &ctx).context("resolving the initial phase point")?;
    let exact = evolve(&start, &cfg.einbein, cfg.m, cfg.span, cfg.steps)?;
    let traj = match cfg.integrator {
        Integrator::Exact => exact.clone(),
        Integrator::Rk4 => evolve_rk4(&start, &cfg.einbein, cfg.m, cfg.span, cfg.steps)?,
    };
    let traj = if cfg.reparametrize {
        proper_time_reparametrize(&traj).context("reparametrizing by proper time")?
    } else {
        traj
    };

    let scale = 1.0 + cfg.x.max_abs() + p.max_abs() + cfg.mu0.abs();
    let p2 = p.norm2();
    let mut shell: f64 = 0.0;
    let mut charges: f64 = 0.0;
    let mut mu: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for (s, e) in traj.samples.iter().zip(&exact.samples) {
        shell = shell.max((s.p.norm2() - p2).abs() / (scale * scale));
        charges = charges.max(s.noether.max_abs() / scale);
        mu = mu.max((s.mu - exact.mu_at(s.tau)).abs() / scale);
        gap = gap.max(s.state.c.sub(&e.state.c).coeff_norm()).max(s.x.max_abs_diff(&e.x));
    }
    let mut checks = Checks::new("particle");
    checks.check("mass_shell_drift", 1e-9, Ok(shell));
    checks.check("noether_charge_drift", 1e-9, Ok(charges));
    checks.check("mu_closed_form", 1e-9, Ok(mu));
    if cfg.integrator == Integrator::Rk4 {
        checks.check("exact_vs_rk4", 1e-8, Ok(gap / scale));
    }
    out.write("trajectory.csv", |w| Ok(traj.write_csv(w)?))?;
    Ok(checks.records)
}

pub fn ensemble(cfg: &EnsembleConfig, seed: u64, out: &mut OutDir) -> Result<Vec<CheckRecord>> {
    let n = cfg.particles.len();
    let phi = cfg
        .phi
        .as_ref()
        .map(|m| m.to_matrix())
        .unwrap_or_else(|| CMat::identity(n, n));
    let base = EnsembleState::resolve(&cfg.particles, phi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = if cfg.scramble {
        base.apply_gauge(&random_unitary(&mut rng, n))?
    } else {
        base
    };
    let span = cfg.span;
    let taus = linspace(span.0, span.1, cfg.steps + 1);
    let series: Vec<_> = taus
        .iter()
        .map(|&t| state.advance(cfg.einbein.integral(span.0, t)).observables())
        .collect();
    let tracks = track_series(&series, 1e-8)?;
    let scale = cfg
        .particles
        .iter()
        .map(|s| 1.0 + s.x.max_abs() + s.p.max_abs() + s.mu.abs())
        .fold(1.0, f64::max);

    let mut checks = Checks::new("ensemble");
    let diag = [&series[0], &series[series.len() - 1]]
        .into_iter()
        .map(|obs| gauge_back(obs, 1e-8).map(|g| g.residual / scale))
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
    checks.check("gauge_back_residual", 1e-7, diag);

    let ctx = make_algebra(PAIRS_PER_PARTICLE)?;
    let mut used = vec![false; n];
    let mut worst: f64 = 0.0;
    for s in &cfg.particles {
        let pp = resolve_phase_point(&s.x, &s.p, s.mu, &ctx)?;
        let traj = evolve(&pp, &cfg.einbein, cfg.m, span, cfg.steps)?;
        let dist = |r: usize| {
            tracks[r]
                .iter()
                .zip(&traj.samples)
                .map(|(t, smp)| t.x.max_abs_diff(&smp.x).max(t.p.max_abs_diff(&smp.p)))
                .fold(0.0, f64::max)
        };
        let (r, d) = (0..n)
            .filter(|r| !used[*r])
            .map(|r| (r, dist(r)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| anyhow!("fewer tracks than particles"))?;
        used[r] = true;
        worst = worst.max(d / scale);
    }
    checks.check("tracks_match_particles", 1e-7, Ok(worst));

    let a0 = state.action_value(&cfg.einbein, cfg.m, span, cfg.steps)?;
    let (j0, z0) = state.noether_matrices();
    let mut da: f64 = 0.0;
    let mut dn: f64 = 0.0;
    for _ in 0..cfg.unitaries {
        let u = random_unitary(&mut rng, n);
        let moved = state.apply_gauge(&u)?;
        let a = moved.action_value(&cfg.einbein, cfg.m, span, cfg.steps)?;
        da = da.max((a - a0).abs() / (1.0 + a0.abs()));
        let (j1, z1) = moved.noether_matrices();
        let conj = |m: &CMat| &u * m * u.adjoint();
        for a in 0..2 {
            for b in 0..2 {
                dn = dn.max(max_abs(&(&j1[a][b] - conj(&j0[a][b]))));
            }
        }
        dn = dn.max(max_abs(&(&z1 - conj(&z0))));
    }
    if cfg.unitaries > 0 {
        checks.check("action_invariance", 1e-9, Ok(da));
        checks.check("noether_matrices_covariant", 1e-10, Ok(dn / scale));
    }

    out.write("tracks.csv", |w| Ok(write_tracks_csv(&taus, &tracks, w)?))?;
    out.write_json("frame.json", &FrameRecord::new(&state, seed))?;
    Ok(checks.records)
}

#[derive(Serialize)]
struct BornRecord<'a> {
    observable: &'a str,
    histogram: &'a BornHistogram,
    chi_square: ChiSquareTest,
}

pub fn matmech(cfg: &MatmechConfig, seed: u64, out: &mut OutDir) -> Result<Vec<CheckRecord>> {
    let n = cfg.n;
    let st = SpacetimePairs::new(n, cfg.k, cfg.p0_offset.unwrap_or(cfg.m))?;
    let [a, b, c] = &cfg.packets;
    let state = ProductState {
        factors: [
            StateVector::basis(n, 0),
            StateVector::wavepacket(n, cfg.k, a.x0, a.p0),
            StateVector::wavepacket(n, cfg.k, b.x0, b.p0),
            StateVector::wavepacket(n, cfg.k, c.x0, c.p0),
        ],
    };
    let mut checks = Checks::new("matmech");
    let support = state
        .factors
        .iter()
        .map(StateVector::top_quarter_weight)
        .fold(0.0, f64::max);
    checks.check("state_interior_supported", 1e-8, Ok(support));

    let pair = build_truncated_pair(n, cfg.k)?;
    let heis = heisenberg_evolve(&pair, cfg.m, (0.0, cfg.tau_bar_max), cfg.steps, Propagator::Spectral)?;
    let closed = heis
        .taus
        .iter()
        .zip(&heis.x)
        .map(|(t, x)| block_deviation(x, &heisenberg_closed_form(&pair, cfg.m, *t), n / 4))
        .fold(0.0, f64::max);
    checks.check("heisenberg_closed_form", 1e-8, Ok(closed));

    let rows = expectation_trace(&st, &state, cfg.m, cfg.tau_bar_max, cfg.steps)?;
    let ehrenfest = rows.iter().map(|r| r.ehrenfest_residual).fold(0.0, f64::max);
    checks.check("ehrenfest", 1e-6, Ok(ehrenfest));

    let nr = nonrel_limit_check(&st, &state, cfg.m, cfg.tau_bar_max, cfg.steps)?;
    checks.check("nonrelativistic_limit", 1e-7, Ok(nr.spatial_deviation.max(nr.dt_residual)));

    let observable = &st.pairs[1].x;
    let total: f64 = born_distribution(&state.factors[1], observable)?
        .iter()
        .map(|o| o.probability)
        .sum();
    checks.check("born_probabilities_sum", 1e-12, Ok((total - 1.0).abs()));
    let hist = sample_born(&state.factors[1], observable, cfg.shots, seed, cfg.workers)?;
    let chi = chi_square(&hist);
    checks.check("born_chi_square_99", 0.99, Ok(1.0 - chi.p_value));

    out.write("trace.csv", |w| Ok(write_trace_csv(&rows, w)?))?;
    out.write_json(
        "born.json",
        &BornRecord {
            observable: "x1",
            histogram: &hist,
            chi_square: chi,
        },
    )?;
    Ok(checks.records)
}

#[derive(Serialize)]
struct WorldsheetRecord {
    header: WorldsheetHeader,
    field_seed: u64,
    mass: f64,
    kappa: f64,
    identities: IdentityReport,
    noether: NoetherReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced: Option<ReducedReport>,
}

pub fn string(cfg: &StringConfig, seed: u64, out: &mut OutDir) -> Result<Vec<CheckRecord>> {
    let ctx = make_algebra(cfg.field_pairs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = None;
    for _ in 0..FIELD_DRAWS {
        let field_seed: u64 = rng.random();
        let grid = SmoothField::random(&ctx, field_seed).grid(&ctx, cfg.n_tau, cfg.n_sigma)?;
        if let Ok(geom) = induced_geometry(&grid) {
            if let Ok(mm) = multimomenta(&grid, &geom) {
                drawn = Some((field_seed, grid, geom, mm));
                break;
            }
        }
    }
    let (field_seed, grid, geom, mm) = drawn
        .ok_or_else(|| anyhow!("no random field with a definite worldsheet metric in {FIELD_DRAWS} draws"))?;
    let ids = identity_report(&grid, &geom, &mm, cfg.m, cfg.kappa);
    let noether = noether_report(&grid, &mm, 1e-9)?;
    let moms = momentum_field(&grid, &geom, &mm);

    let mut checks = Checks::new("string");
    checks.check("metric_hermiticity", 1e-12, Ok(geom.hermiticity_residual()));
    checks.check("metric_recomposition", 1e-12, Ok(geom.recomposition_residual()));
    checks.check("momentum_square_identity", 1e-8, Ok(ids.momentum_square));
    checks.check("pairing_identity", 1e-8, Ok(ids.pairing));
    checks.check("hamiltonian_density", 1e-8, Ok(ids.hamiltonian_density));
    checks.check("velocity_relation", 1e-8, Ok(ids.velocity_relation));
    checks.check("first_order_action", 1e-8, Ok(ids.first_order_action_gap));
    checks.check("metric_trace", 1e-8, Ok(ids.metric_trace));

    let reduced = match &cfg.reduced {
        Some(r) => {
            let sigmas = linspace(r.sigma_range.0, r.sigma_range.1, r.slice.len());
            let sheet = reduced_evolve(&r.slice, sigmas, cfg.m, r.tau_end, r.steps)?;
            let rep = sheet.verify()?;
            checks.check("reduced_columns_vs_particle", 1e-8, Ok(rep.column_deviation));
            checks.check("reduced_velocity", 1e-6, Ok(rep.velocity_residual));
            checks.check("reduced_mass_shell", 1e-6, Ok(rep.mass_shell_residual));
            checks.check("reduced_metric_trace", 1e-6, Ok(rep.trace_residual));
            checks.check("reduced_dilaton_source", 1e-6, Ok(rep.dilaton_source_residual));
            checks.check("reduced_noether_condition", 1e-9, Ok(rep.noether_residual));
            checks.check("reduced_h11_mu1", 1e-9, Ok(rep.h11_mu1_deviation));
            checks.check("reduced_h11_mu1_sigma_independent", 1e-9, Ok(rep.h11_mu1_spread));
            out.write("reduced.csv", |w| Ok(sheet.write_csv(w)?))?;
            Some(rep)
        }
        None => None,
    };

    out.write("worldsheet.csv", |w| Ok(write_worldsheet_csv(w, &grid, &geom, &moms)?))?;
    out.write_json(
        "worldsheet.json",
        &WorldsheetRecord {
            header: WorldsheetHeader::new(&grid),
            field_seed,
            mass: cfg.m,
            kappa: cfg.kappa,
            identities: ids,
            noether,
            reduced,
        },
    )?;
    Ok(checks.records)
}

pub fn verify(cfg: &VerifyConfig, seed: u64) -> Result<Vec<CheckRecord>> {
    Ok(verify_all(&cfg.suites, seed)?)
}
