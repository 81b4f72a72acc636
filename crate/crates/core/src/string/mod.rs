//! Clifford worldsheets: spinor fields over (tau, sigma), their induced
//! metric and dilaton, multi-momenta, Noether currents and the reduced
//! column-wise evolution.

mod constraint;
mod geometry;
mod grid;
mod modes;
mod reduced;

use std::io::Write;

use serde::Serialize;

pub use constraint::{lift_particle, mu_field, node_currents, noether_report, NodeCurrents, NoetherReport};
pub use geometry::{
    first_order_action, identity_report, induced_geometry, metric_tensor, momentum_field,
    multimomenta, node_momentum, string_action, IdentityReport, InducedGeometry, MultiMomenta,
    NodeGeometry, NodeMomentum, DEGENERATE_DET,
};
pub use grid::{linspace, SmoothField, WorldsheetGrid};
pub use modes::{build_modes, gaussian_packets, DeltaSequence, StringModeSet, MODE_SIGNS};
pub use reduced::{reduced_evolve, ReducedReport, ReducedSheet, SliceNode};

use crate::error::Result;
use crate::export::{csv_writer, fmt_float};

pub const WORLDSHEET_COLUMNS: [&str; 14] = [
    "tau", "sigma", "x0", "x1", "x2", "x3", "phi", "sqrt_h", "h00", "h01", "h11", "ww", "p2",
    "pairing",
];

/// Metadata written next to the worldsheet table.
#[derive(Clone, Debug, Serialize)]
pub struct WorldsheetHeader {
    pub n_tau: usize,
    pub n_sigma: usize,
    pub tau_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub algebra_n: usize,
    pub columns: Vec<String>,
}

impl WorldsheetHeader {
    pub fn new(grid: &WorldsheetGrid) -> Self {
        let (nt, ns) = grid.shape();
        WorldsheetHeader {
            n_tau: nt,
            n_sigma: ns,
            tau_range: (grid.taus[0], grid.taus[nt - 1]),
            sigma_range: (grid.sigmas[0], grid.sigmas[ns - 1]),
            algebra_n: grid.context().n(),
            columns: WORLDSHEET_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn write_worldsheet_csv<W: Write>(
    w: W,
    grid: &WorldsheetGrid,
    geom: &InducedGeometry,
    moms: &[NodeMomentum],
) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(WORLDSHEET_COLUMNS)?;
    let (nt, ns) = grid.shape();
    for i in 0..nt {
        for j in 0..ns {
            let k = grid.index(i, j);
            let n = &geom.nodes[k];
            let q = &moms[k];
            let mut rec = vec![fmt_float(grid.taus[i]), fmt_float(grid.sigmas[j])];
            rec.extend(grid.x(i, j).0.iter().map(|v| fmt_float(*v)));
            for v in [n.phi, n.sqrt_h, n.h[(0, 0)], n.h[(0, 1)], n.h[(1, 1)], n.ww, q.p2, q.pairing] {
                rec.push(fmt_float(v));
            }
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}
