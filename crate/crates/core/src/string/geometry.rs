use nalgebra::Matrix2;
use rayon::prelude::*;

use super::grid::WorldsheetGrid;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spinor::{
    apply_matrix, contract_sigma, gram_conj, lower_indices, pauli, raise_indices, FourVector,
    Spinor2, SpinorField, ETA,
};

/// Smallest `|det h|` accepted before a node counts as degenerate.
pub const DEGENERATE_DET: f64 = 1e-14;

/// Induced quantities at one worldsheet node.
#[derive(Clone, Debug)]
pub struct NodeGeometry {
    /// `V_alpha^mu = tr(sigma_mu M_alpha)` with `M_alpha^{AB} = c^A . conj(d_alpha c^B)`.
    pub v: [[C64; 4]; 2],
    pub g: Matrix2<C64>,
    pub h: Matrix2<f64>,
    pub h_inv: Matrix2<f64>,
    pub sqrt_h: f64,
    pub phi: f64,
    /// `U^{AB} = h^{alpha beta} d_alpha c^A . conj(d_beta c^B)`.
    pub u: Spinor2,
    pub w: FourVector,
    /// `W.W = det U`.
    pub ww: f64,
}

impl NodeGeometry {
    /// `phi sqrt(h)`, the measure that multiplies every Lagrangian density.
    pub fn density(&self) -> f64 {
        self.phi * self.sqrt_h
    }
}

#[derive(Clone, Debug)]
pub struct InducedGeometry {
    pub shape: (usize, usize),
    pub nodes: Vec<NodeGeometry>,
}

fn node_geometry(grid: &WorldsheetGrid, i: usize, j: usize) -> (Option<NodeGeometry>, f64) {
    let c = grid.node(i, j);
    let dc = [grid.derivative(i, j, 0), grid.derivative(i, j, 1)];
    let v = [0, 1].map(|a| {
        let m = gram_conj(c, &dc[a]);
        [0, 1, 2, 3].map(|mu| (pauli(mu) * m).trace())
    });
    let g = Matrix2::from_fn(|a, b| {
        (0..4)
            .map(|mu| v[a][mu] * v[b][mu].conj() * ETA[mu])
            .sum::<C64>()
    });
    let h = g.map(|z| z.re);
    let det = h.determinant();
    if det.abs() < DEGENERATE_DET {
        return (None, det);
    }
    let h_inv = h.try_inverse().expect("non-degenerate metric");
    let sqrt_h = det.abs().sqrt();
    let phi = g[(0, 1)].im / sqrt_h;
    let mut u = Spinor2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            u += gram_conj(&dc[a], &dc[b]) * C64::new(h_inv[(a, b)], 0.0);
        }
    }
    let ww = u.determinant().re;
    let w = contract_sigma(&u).map(|z| z.re);
    (
        Some(NodeGeometry {
            v,
            g,
            h,
            h_inv,
            sqrt_h,
            phi,
            u,
            w: FourVector(w),
            ww,
        }),
        det,
    )
}

/// Induced metric, dilaton and the `W` vector at every node. Fails with
/// [`Error::DegenerateMetric`] when any node has `|det h| < 1e-14`.
pub fn induced_geometry(grid: &WorldsheetGrid) -> Result<InducedGeometry> {
    let (nt, ns) = grid.shape();
    let raw: Vec<(Option<NodeGeometry>, f64)> = (0..nt * ns)
        .into_par_iter()
        .map(|k| node_geometry(grid, k / ns, k % ns))
        .collect();
    let bad: Vec<usize> = raw
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| n.is_none())
        .map(|(k, _)| k)
        .collect();
    if let Some(&first) = bad.first() {
        return Err(Error::DegenerateMetric {
            count: bad.len(),
            tau_index: first / ns,
            sigma_index: first % ns,
        });
    }
    Ok(InducedGeometry {
        shape: (nt, ns),
        nodes: raw.into_iter().map(|(n, _)| n.unwrap()).collect(),
    })
}

impl InducedGeometry {
    pub fn node(&self, i: usize, j: usize) -> &NodeGeometry {
        &self.nodes[i * self.shape.1 + j]
    }

    /// Largest violation of `g_{alpha beta} = conj(g_{beta alpha})`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                let d = n.g - n.g.adjoint();
                d.iter().fold(0.0f64, |a, z| a.max(z.norm()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of g from `h + i phi sqrt(h) eps`.
    pub fn recomposition_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                let s = n.density();
                let r = Matrix2::new(
                    C64::new(n.h[(0, 0)], 0.0),
                    C64::new(n.h[(0, 1)], s),
                    C64::new(n.h[(1, 0)], -s),
                    C64::new(n.h[(1, 1)], 0.0),
                );
                (n.g - r).iter().fold(0.0f64, |a, z| a.max(z.norm()))
            })
            .fold(0.0, f64::max)
    }

    pub fn phi_values(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.phi).collect()
    }
}

/// Multi-momentum densities `d*^alpha_A` and the measure `phi sqrt(h)` at
/// every node.
#[derive(Clone, Debug)]
pub struct MultiMomenta {
    pub shape: (usize, usize),
    pub d_star: Vec<[SpinorField; 2]>,
    pub density: Vec<f64>,
}

impl MultiMomenta {
    pub fn node(&self, i: usize, j: usize) -> &[SpinorField; 2] {
        &self.d_star[i * self.shape.1 + j]
    }
}

/// `d*^alpha_A = (W.W)^{-2/3} W_mu sigma^mu_{AB} h^{alpha beta} d_beta c*^B`.
pub fn multimomenta(grid: &WorldsheetGrid, geom: &InducedGeometry) -> Result<MultiMomenta> {
    let (nt, ns) = grid.shape();
    if geom.shape != (nt, ns) {
        return Err(Error::Dimension {
            expected: nt * ns,
            got: geom.nodes.len(),
        });
    }
    if let Some((k, n)) = geom.nodes.iter().enumerate().find(|(_, n)| !(n.ww > 0.0)) {
        return Err(Error::Domain(format!(
            "W.W = {:.3e} is not positive at node ({}, {})",
            n.ww,
            k / ns,
            k % ns
        )));
    }
    let d_star = (0..nt * ns)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / ns, k % ns);
            let n = &geom.nodes[k];
            let dcc = [grid.derivative(i, j, 0).conj(), grid.derivative(i, j, 1).conj()];
            let low = lower_indices(&n.u) * C64::new(n.ww.powf(-2.0 / 3.0), 0.0);
            [0, 1].map(|a| {
                let mut s = SpinorField::zero(grid.context());
                for b in 0..2 {
                    s.axpy(C64::new(n.h_inv[(a, b)], 0.0), &dcc[b]);
                }
                apply_matrix(&low, &s)
            })
        })
        .collect();
    Ok(MultiMomenta {
        shape: (nt, ns),
        d_star,
        density: geom.nodes.iter().map(NodeGeometry::density).collect(),
    })
}

/// Momentum-derived quantities at one node.
#[derive(Clone, Debug)]
pub struct NodeMomentum {
    /// `p_{AB} = h_{alpha beta} d*^alpha_A . d^beta_B`.
    pub p_low: Spinor2,
    pub p: FourVector,
    pub p2: f64,
    /// `d^alpha . d_alpha c + c.c.`
    pub pairing: f64,
    pub ww_cbrt: f64,
}

pub fn node_momentum(grid: &WorldsheetGrid, geom: &InducedGeometry, mm: &MultiMomenta, i: usize, j: usize) -> NodeMomentum {
    let n = geom.node(i, j);
    let d = mm.node(i, j);
    let mut p_low = Spinor2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            p_low += gram_conj(&d[a], &d[b]) * C64::new(n.h[(a, b)], 0.0);
        }
    }
    let mut pair = C64::new(0.0, 0.0);
    for a in 0..2 {
        let dc = grid.derivative(i, j, a);
        for k in 0..2 {
            pair += d[a].comps[k].dot(&dc.comps[k]);
        }
    }
    NodeMomentum {
        p_low,
        p: FourVector(contract_sigma(&raise_indices(&p_low)).map(|z| z.re)),
        p2: p_low.determinant().re,
        pairing: 2.0 * pair.re,
        ww_cbrt: n.ww.cbrt(),
    }
}

pub fn momentum_field(grid: &WorldsheetGrid, geom: &InducedGeometry, mm: &MultiMomenta) -> Vec<NodeMomentum> {
    let (nt, ns) = grid.shape();
    (0..nt * ns)
        .into_par_iter()
        .map(|k| node_momentum(grid, geom, mm, k / ns, k % ns))
        .collect()
}

/// Algebraic identities of the worldsheet momenta; each entry is the
/// largest absolute residual over the grid.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct IdentityReport {
    /// `p^2 - (W.W)^{1/3}`.
    pub momentum_square: f64,
    /// `pairing - 4 (W.W)^{1/3}`.
    pub pairing: f64,
    /// `phi sqrt(h) pairing - L - (p^2 + m^2) phi sqrt(h)`.
    pub hamiltonian_density: f64,
    /// `d_alpha c^A - h_{alpha beta} p^{AE} d^beta_E`.
    pub velocity_relation: f64,
    /// Difference between the first-order and the second-order action.
    pub first_order_action_gap: f64,
    /// `h_{alpha beta} T^{alpha beta} - phi sqrt(h) (p^2 - m^2)`.
    pub metric_trace: f64,
}

/// `int (3 (W.W)^{1/3} - m^2) phi sqrt(h)` by trapezoid quadrature.
pub fn string_action(grid: &WorldsheetGrid, geom: &InducedGeometry, m: f64) -> f64 {
    let (nt, ns) = grid.shape();
    let mut acc = 0.0;
    for i in 0..nt {
        for j in 0..ns {
            let n = geom.node(i, j);
            acc += grid.weight(i, j) * (3.0 * n.ww.cbrt() - m * m) * n.density();
        }
    }
    acc
}

/// `int (pairing - p^2 - m^2) phi sqrt(h)` by trapezoid quadrature.
pub fn first_order_action(grid: &WorldsheetGrid, mm: &MultiMomenta, moms: &[NodeMomentum], m: f64) -> f64 {
    let (nt, ns) = grid.shape();
    let mut acc = 0.0;
    for i in 0..nt {
        for j in 0..ns {
            let k = grid.index(i, j);
            let q = &moms[k];
            acc += grid.weight(i, j) * (q.pairing - q.p2 - m * m) * mm.density[k];
        }
    }
    acc
}

/// Metric variation tensor `T^{alpha beta}` at every node, with the dilaton
/// gradient taken by finite differences on the grid.
pub fn metric_tensor(
    grid: &WorldsheetGrid,
    geom: &InducedGeometry,
    mm: &MultiMomenta,
    moms: &[NodeMomentum],
    m: f64,
    kappa: f64,
) -> Vec<Matrix2<f64>> {
    let (nt, ns) = grid.shape();
    let phi = geom.phi_values();
    (0..nt * ns)
        .map(|k| {
            let (i, j) = (k / ns, k % ns);
            let n = &geom.nodes[k];
            let q = &moms[k];
            let d = mm.node(i, j);
            let dphi = nalgebra::Vector2::new(
                grid.scalar_derivative(&phi, i, j, 0),
                grid.scalar_derivative(&phi, i, j, 1),
            );
            let up = n.h_inv * dphi;
            let grad2 = dphi.dot(&up);
            let lag = (q.pairing - q.p2 - m * m) * n.density() + kappa * n.sqrt_h * grad2;
            let p_up = raise_indices(&q.p_low);
            Matrix2::from_fn(|a, b| {
                let s = (gram_conj(&d[a], &d[b]) + gram_conj(&d[b], &d[a])) * C64::new(0.5, 0.0);
                let contraction = (p_up.component_mul(&s).sum() * 0.5).re;
                -2.0 * n.density() * contraction - kappa * n.sqrt_h * up[a] * up[b]
                    + 0.5 * lag * n.h_inv[(a, b)]
            })
        })
        .collect()
}

pub fn identity_report(
    grid: &WorldsheetGrid,
    geom: &InducedGeometry,
    mm: &MultiMomenta,
    m: f64,
    kappa: f64,
) -> IdentityReport {
    let moms = momentum_field(grid, geom, mm);
    let (nt, ns) = grid.shape();
    let mut rep = IdentityReport::default();
    for (k, q) in moms.iter().enumerate() {
        let n = &geom.nodes[k];
        let dens = n.density();
        rep.momentum_square = rep.momentum_square.max((q.p2 - q.ww_cbrt).abs());
        rep.pairing = rep.pairing.max((q.pairing - 4.0 * q.ww_cbrt).abs());
        let lag = (3.0 * q.ww_cbrt - m * m) * dens;
        let ham = dens * q.pairing - lag;
        rep.hamiltonian_density = rep
            .hamiltonian_density
            .max((ham - (q.p2 + m * m) * dens).abs());
        let (i, j) = (k / ns, k % ns);
        let d = mm.node(i, j);
        let p_up = raise_indices(&q.p_low);
        for a in 0..2 {
            let mut rhs = SpinorField::zero(grid.context());
            for b in 0..2 {
                rhs.axpy(C64::new(n.h[(a, b)], 0.0), &apply_matrix(&p_up, &d[b].conj()));
            }
            let r = grid.derivative(i, j, a).sub(&rhs).coeff_norm();
            rep.velocity_relation = rep.velocity_relation.max(r);
        }
    }
    rep.first_order_action_gap =
        (first_order_action(grid, mm, &moms, m) - string_action(grid, geom, m)).abs();
    let t = metric_tensor(grid, geom, mm, &moms, m, kappa);
    for k in 0..nt * ns {
        let n = &geom.nodes[k];
        let tr = n.h.component_mul(&t[k]).sum();
        let target = n.density() * (moms[k].p2 - m * m);
        rep.metric_trace = rep.metric_trace.max((tr - target).abs());
    }
    rep
}
