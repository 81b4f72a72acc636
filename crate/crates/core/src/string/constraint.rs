use super::geometry::MultiMomenta;
use super::grid::WorldsheetGrid;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::particle::Trajectory;
use crate::spinor::{gram, Spinor2, SpinorField};

/// `mu^alpha = (1/2) Re sum_A d*^alpha_A . c^A` at every node.
pub fn mu_field(grid: &WorldsheetGrid, mm: &MultiMomenta) -> Vec<[f64; 2]> {
    grid.c
        .iter()
        .zip(&mm.d_star)
        .map(|(c, d)| [0, 1].map(|a| 0.5 * pair(&d[a], c).re))
        .collect()
}

fn pair(d: &SpinorField, c: &SpinorField) -> C64 {
    d.comps[0].dot(&c.comps[0]) + d.comps[1].dot(&c.comps[1])
}

/// Worldsheet Noether currents at one node.
#[derive(Clone, Debug)]
pub struct NodeCurrents {
    /// `J^alpha_{AB} = phi sqrt(h) (d*^alpha_A . c_B + d*^alpha_B . c_A)`.
    pub j_ab: [Spinor2; 2],
    /// `j^alpha = -2 phi sqrt(h) Im sum_A d*^alpha_A . c^A`.
    pub j: [f64; 2],
}

pub fn node_currents(c: &SpinorField, d: &[SpinorField; 2], density: f64) -> NodeCurrents {
    let low = c.lowered();
    let j_ab = [0, 1].map(|a| {
        let n = gram(&d[a], &low);
        (n + n.transpose()) * C64::new(density, 0.0)
    });
    let j = [0, 1].map(|a| -2.0 * density * pair(&d[a], c).im);
    NodeCurrents { j_ab, j }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct NoetherReport {
    /// `max |mu^0 d^1_A - mu^1 d^0_A|`.
    pub constraint_residual: f64,
    /// Largest current component on the initial tau row.
    pub initial_current_max: f64,
    /// `max |d*^alpha_A . c^B - mu^alpha delta_A^B|`.
    pub noether_condition_residual: f64,
    /// Largest imaginary part of `(1/2) sum_A d*^alpha_A . c^A`.
    pub scalar_imag_max: f64,
    /// `None` when the premises (constraint and vanishing initial currents)
    /// do not hold, otherwise whether the proportionality was observed.
    pub verified: Option<bool>,
}

pub fn noether_report(grid: &WorldsheetGrid, mm: &MultiMomenta, tol: f64) -> Result<NoetherReport> {
    if mm.shape != grid.shape() {
        return Err(Error::Dimension {
            expected: grid.c.len(),
            got: mm.d_star.len(),
        });
    }
    let mus = mu_field(grid, mm);
    let (_, ns) = grid.shape();
    let mut constraint: f64 = 0.0;
    let mut cond: f64 = 0.0;
    let mut imag: f64 = 0.0;
    let mut initial: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (k, (c, d)) in grid.c.iter().zip(&mm.d_star).enumerate() {
        let mu = mus[k];
        scale = scale.max(mu[0].abs()).max(mu[1].abs());
        let mut r = d[1].scale(C64::new(mu[0], 0.0));
        r.axpy(C64::new(-mu[1], 0.0), &d[0]);
        constraint = constraint.max(r.coeff_norm());
        for a in 0..2 {
            let n = gram(&d[a], c);
            let dev = n - Spinor2::identity() * C64::new(mu[a], 0.0);
            cond = cond.max(dev.iter().fold(0.0, |x, z| x.max(z.norm())));
            imag = imag.max((0.5 * pair(&d[a], c)).im.abs());
        }
        if k < ns {
            let cur = node_currents(c, d, mm.density[k]);
            for a in 0..2 {
                initial = initial.max(cur.j[a].abs());
                initial = initial.max(cur.j_ab[a].iter().fold(0.0, |x, z| x.max(z.norm())));
            }
        }
    }
    let premises = constraint <= tol * scale && initial <= tol * scale;
    let verified = premises.then(|| cond <= tol * scale && imag <= tol * scale);
    Ok(NoetherReport {
        constraint_residual: constraint,
        initial_current_max: initial,
        noether_condition_residual: cond,
        scalar_imag_max: imag,
        verified,
    })
}

/// Worldsheet built from a particle trajectory, constant along sigma, with
/// `d^0 = d* / e`, `d^1 = 0` and unit measure.
pub fn lift_particle(traj: &Trajectory, sigmas: Vec<f64>) -> Result<(WorldsheetGrid, MultiMomenta)> {
    let ctx = traj.start.context().clone();
    let taus: Vec<f64> = traj.samples.iter().map(|s| s.tau).collect();
    let ns = sigmas.len();
    let mut c = Vec::with_capacity(taus.len() * ns);
    let mut d_star = Vec::with_capacity(taus.len() * ns);
    for s in &traj.samples {
        let e = traj.einbein.value(s.tau);
        let d0 = s.state.d_star.scale(C64::new(1.0 / e, 0.0));
        for _ in 0..ns {
            c.push(s.state.c.clone());
            d_star.push([d0.clone(), SpinorField::zero(&ctx)]);
        }
    }
    let nt = taus.len();
    let grid = WorldsheetGrid::from_nodes(&ctx, taus, sigmas, c)?;
    Ok((
        grid,
        MultiMomenta {
            shape: (nt, ns),
            d_star,
            density: vec![1.0; nt * ns],
        },
    ))
}
