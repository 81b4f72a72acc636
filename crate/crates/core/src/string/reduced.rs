use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::WorldsheetGrid;
use crate::clifford::{make_algebra, AlgebraContext};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_float};
use crate::linalg::C64;
use crate::particle::{evolve, hamiltonian_velocity, velocity_invariant, EinbeinProfile};
use crate::spinor::{resolve_phase_point, FourVector, PhasePoint, SpinorField, PAIRS_PER_PARTICLE};

/// Initial data of one sigma column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceNode {
    pub x: FourVector,
    pub p: FourVector,
    pub mu: f64,
}

/// Worldsheet evolved column by column in the frame where `d^1` vanishes and
/// `e^1_1 = 1 / (2 m mu)`.
#[derive(Clone, Debug)]
pub struct ReducedSheet {
    pub grid: WorldsheetGrid,
    pub mass: f64,
    pub starts: Vec<PhasePoint>,
    pub mu0: Vec<f64>,
    /// `e^1_1` at every node, row-major in (tau, sigma).
    pub zweibein: Vec<f64>,
    /// `mu = (1/2) Re d*_A . c^A` at every node.
    pub mu: Vec<f64>,
}

fn column_mu(c: &SpinorField, d_star: &SpinorField) -> f64 {
    0.5 * (d_star.comps[0].dot(&c.comps[0]) + d_star.comps[1].dot(&c.comps[1])).re
}

fn evolve_column(start: &PhasePoint, m: f64, taus: &[f64]) -> Vec<SpinorField> {
    let field = |c: &SpinorField| {
        let e = 1.0 / (2.0 * m * column_mu(c, &start.d_star));
        hamiltonian_velocity(
            &PhasePoint {
                c: c.clone(),
                d_star: start.d_star.clone(),
            },
            e,
        )
    };
    let mut out = Vec::with_capacity(taus.len());
    let mut c = start.c.clone();
    out.push(c.clone());
    for w in taus.windows(2) {
        let h = w[1] - w[0];
        let k1 = field(&c);
        let mut t = c.clone();
        t.axpy(C64::new(0.5 * h, 0.0), &k1);
        let k2 = field(&t);
        let mut t = c.clone();
        t.axpy(C64::new(0.5 * h, 0.0), &k2);
        let k3 = field(&t);
        let mut t = c.clone();
        t.axpy(C64::new(h, 0.0), &k3);
        let k4 = field(&t);
        for (k, wt) in [(&k1, h / 6.0), (&k2, h / 3.0), (&k3, h / 3.0), (&k4, h / 6.0)] {
            c.axpy(C64::new(wt, 0.0), k);
        }
        out.push(c.clone());
    }
    out
}

/// Resolves each column of the initial slice and integrates it with RK4 on
/// `[0, tau_end]`. Columns run in parallel.
pub fn reduced_evolve(
    slice: &[SliceNode],
    sigmas: Vec<f64>,
    m: f64,
    tau_end: f64,
    steps: usize,
) -> Result<ReducedSheet> {
    if !(m > 0.0) {
        return Err(Error::Validation("mass must be positive".into()));
    }
    if steps < 2 || !(tau_end > 0.0) {
        return Err(Error::Validation("need tau_end > 0 and at least 2 steps".into()));
    }
    if slice.len() != sigmas.len() {
        return Err(Error::Dimension {
            expected: sigmas.len(),
            got: slice.len(),
        });
    }
    let tol = 1e-9 * m.max(1.0).powi(2);
    for (j, s) in slice.iter().enumerate() {
        if !(s.mu > 0.0) {
            return Err(Error::Frame(format!(
                "column {j} has mu = {:.3e}; the reduced frame needs mu > 0",
                s.mu
            )));
        }
        let r = (s.p.norm2() - m * m).abs();
        if r > tol {
            return Err(Error::Frame(format!(
                "column {j} has p^2 - m^2 = {r:.3e}; the reduced frame needs a common mass shell"
            )));
        }
    }
    let ctx: Arc<AlgebraContext> = make_algebra(PAIRS_PER_PARTICLE)?;
    let starts = slice
        .iter()
        .map(|s| resolve_phase_point(&s.x, &s.p, s.mu, &ctx))
        .collect::<Result<Vec<_>>>()?;
    let taus = super::grid::linspace(0.0, tau_end, steps + 1);
    let columns: Vec<Vec<SpinorField>> = starts
        .par_iter()
        .map(|st| evolve_column(st, m, &taus))
        .collect();
    let ns = sigmas.len();
    let mut c = Vec::with_capacity(taus.len() * ns);
    let mut zweibein = Vec::with_capacity(taus.len() * ns);
    let mut mu = Vec::with_capacity(taus.len() * ns);
    for i in 0..taus.len() {
        for (j, col) in columns.iter().enumerate() {
            let v = column_mu(&col[i], &starts[j].d_star);
            mu.push(v);
            zweibein.push(1.0 / (2.0 * m * v));
            c.push(col[i].clone());
        }
    }
    Ok(ReducedSheet {
        grid: WorldsheetGrid::from_nodes(&ctx, taus, sigmas, c)?,
        mass: m,
        starts,
        mu0: slice.iter().map(|s| s.mu).collect(),
        zweibein,
        mu,
    })
}

/// Residuals of the reduced worldsheet against its particle description.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ReducedReport {
    /// Largest distance between a column and the exact particle trajectory
    /// with the matching proper-time einbein (spinor coefficients and x).
    pub column_deviation: f64,
    /// `max |dx/dtau - p/m|` with finite differences.
    pub velocity_residual: f64,
    pub mass_shell_residual: f64,
    /// `max |(det V / (e^1_1)^4)^{1/3} - m^2|` with `V = dc . dc*`.
    pub trace_residual: f64,
    /// `max |2 Re(d* . dc) / e^1_1 - p^2 - m^2 - 2 m^2|`.
    pub dilaton_source_residual: f64,
    pub noether_residual: f64,
    /// `max |e^1_1 mu - 1/(2m)|`.
    pub h11_mu1_deviation: f64,
    /// Largest spread of `e^1_1 mu` along sigma on any tau row.
    pub h11_mu1_spread: f64,
}

impl ReducedSheet {
    pub fn state(&self, i: usize, j: usize) -> PhasePoint {
        PhasePoint {
            c: self.grid.node(i, j).clone(),
            d_star: self.starts[j].d_star.clone(),
        }
    }

    pub fn verify(&self) -> Result<ReducedReport> {
        let m = self.mass;
        let (nt, ns) = self.grid.shape();
        let taus = &self.grid.taus;
        let span = (taus[0], taus[nt - 1]);
        let mut rep = ReducedReport::default();
        let xs: Vec<FourVector> = (0..nt * ns).map(|k| self.grid.x(k / ns, k % ns)).collect();
        let series: Vec<Vec<f64>> = (0..4).map(|mu| xs.iter().map(|x| x.0[mu]).collect()).collect();
        for j in 0..ns {
            let profile = EinbeinProfile::ProperTime {
                mass: m,
                mu0: self.mu0[j],
            };
            let traj = evolve(&self.starts[j], &profile, m, span, nt - 1)?;
            let p = traj.p;
            rep.mass_shell_residual = rep.mass_shell_residual.max((p.norm2() - m * m).abs());
            for i in 0..nt {
                let k = self.grid.index(i, j);
                let s = &traj.samples[i];
                rep.column_deviation = rep
                    .column_deviation
                    .max(self.grid.c[k].sub(&s.state.c).coeff_norm())
                    .max(xs[k].max_abs_diff(&s.x));
                for mu in 0..4 {
                    let dx = self.grid.scalar_derivative(&series[mu], i, j, 0);
                    rep.velocity_residual = rep.velocity_residual.max((dx - p.0[mu] / m).abs());
                }
                let st = self.state(i, j);
                rep.noether_residual = rep.noether_residual.max(st.noether_condition_residual());
                let e = self.zweibein[k];
                let dc = self.grid.derivative(i, j, 0);
                let q = velocity_invariant(&dc);
                rep.trace_residual = rep.trace_residual.max(((q / e.powi(4)).cbrt() - m * m).abs());
                let pr = st.d_star.comps[0].dot(&dc.comps[0]) + st.d_star.comps[1].dot(&dc.comps[1]);
                let src = 2.0 * pr.re / e - p.norm2() - m * m;
                rep.dilaton_source_residual = rep.dilaton_source_residual.max((src - 2.0 * m * m).abs());
                let hm = e * self.mu[k];
                rep.h11_mu1_deviation = rep.h11_mu1_deviation.max((hm - 1.0 / (2.0 * m)).abs());
            }
        }
        for i in 0..nt {
            let row: Vec<f64> = (0..ns)
                .map(|j| {
                    let k = self.grid.index(i, j);
                    self.zweibein[k] * self.mu[k]
                })
                .collect();
            let hi = row.iter().cloned().fold(f64::MIN, f64::max);
            let lo = row.iter().cloned().fold(f64::MAX, f64::min);
            rep.h11_mu1_spread = rep.h11_mu1_spread.max(hi - lo);
        }
        Ok(rep)
    }

    /// Columns: tau, sigma, x0..x3, e11, mu, h11_mu1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv_writer(w);
        wr.write_record(["tau", "sigma", "x0", "x1", "x2", "x3", "e11", "mu", "h11_mu1"])?;
        let (nt, ns) = self.grid.shape();
        for i in 0..nt {
            for j in 0..ns {
                let k = self.grid.index(i, j);
                let x = self.grid.x(i, j);
                let mut rec = vec![fmt_float(self.grid.taus[i]), fmt_float(self.grid.sigmas[j])];
                rec.extend(x.0.iter().map(|v| fmt_float(*v)));
                rec.push(fmt_float(self.zweibein[k]));
                rec.push(fmt_float(self.mu[k]));
                rec.push(fmt_float(self.zweibein[k] * self.mu[k]));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}
