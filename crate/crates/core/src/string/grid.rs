use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::clifford::{AlgebraContext, CVector};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spinor::{FourVector, SpinorField};

/// Spinor field sampled on a uniform tau x sigma lattice, stored row-major
/// with tau as the slow index.
#[derive(Clone, Debug)]
pub struct WorldsheetGrid {
    ctx: Arc<AlgebraContext>,
    pub taus: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub c: Vec<SpinorField>,
    derivs: Option<Vec<[SpinorField; 2]>>,
}

fn check_axis(name: &str, v: &[f64]) -> Result<f64> {
    if v.len() < 3 {
        return Err(Error::Validation(format!("{name} axis needs at least 3 nodes")));
    }
    let h = v[1] - v[0];
    if !(h > 0.0) {
        return Err(Error::Validation(format!("{name} spacing must be positive")));
    }
    for w in v.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Validation(format!("{name} axis must be uniform")));
        }
    }
    Ok(h)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

impl WorldsheetGrid {
    pub fn from_fn(
        ctx: &Arc<AlgebraContext>,
        taus: Vec<f64>,
        sigmas: Vec<f64>,
        f: impl Fn(f64, f64) -> SpinorField,
    ) -> Result<Self> {
        check_axis("tau", &taus)?;
        check_axis("sigma", &sigmas)?;
        let c = taus
            .iter()
            .flat_map(|&t| sigmas.iter().map(move |&s| (t, s)))
            .map(|(t, s)| f(t, s))
            .collect();
        Ok(WorldsheetGrid {
            ctx: ctx.clone(),
            taus,
            sigmas,
            c,
            derivs: None,
        })
    }

    /// Grid with exact tangent derivatives supplied alongside the field.
    pub fn from_fn_with_derivatives(
        ctx: &Arc<AlgebraContext>,
        taus: Vec<f64>,
        sigmas: Vec<f64>,
        f: impl Fn(f64, f64) -> (SpinorField, [SpinorField; 2]),
    ) -> Result<Self> {
        check_axis("tau", &taus)?;
        check_axis("sigma", &sigmas)?;
        let (c, d): (Vec<_>, Vec<_>) = taus
            .iter()
            .flat_map(|&t| sigmas.iter().map(move |&s| (t, s)))
            .map(|(t, s)| f(t, s))
            .unzip();
        Ok(WorldsheetGrid {
            ctx: ctx.clone(),
            taus,
            sigmas,
            c,
            derivs: Some(d),
        })
    }

    pub fn from_nodes(
        ctx: &Arc<AlgebraContext>,
        taus: Vec<f64>,
        sigmas: Vec<f64>,
        c: Vec<SpinorField>,
    ) -> Result<Self> {
        check_axis("tau", &taus)?;
        check_axis("sigma", &sigmas)?;
        if c.len() != taus.len() * sigmas.len() {
            return Err(Error::Dimension {
                expected: taus.len() * sigmas.len(),
                got: c.len(),
            });
        }
        Ok(WorldsheetGrid {
            ctx: ctx.clone(),
            taus,
            sigmas,
            c,
            derivs: None,
        })
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        &self.ctx
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.taus.len(), self.sigmas.len())
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.sigmas.len() + j
    }

    pub fn node(&self, i: usize, j: usize) -> &SpinorField {
        &self.c[self.index(i, j)]
    }

    pub fn has_exact_derivatives(&self) -> bool {
        self.derivs.is_some()
    }

    pub fn x(&self, i: usize, j: usize) -> FourVector {
        crate::spinor::PhasePoint {
            c: self.node(i, j).clone(),
            d_star: SpinorField::zero(&self.ctx),
        }
        .x()
    }

    /// `d c / d tau` (alpha = 0) or `d c / d sigma` (alpha = 1) at a node.
    /// Exact when supplied, otherwise finite differences: fourth order on
    /// axes with at least five nodes, second order otherwise, one-sided on
    /// the boundary.
    pub fn derivative(&self, i: usize, j: usize, alpha: usize) -> SpinorField {
        if let Some(d) = &self.derivs {
            return d[self.index(i, j)][alpha].clone();
        }
        let mut out = SpinorField::zero(&self.ctx);
        for (k, w) in self.stencil(i, j, alpha) {
            out.axpy(C64::new(w, 0.0), &self.c[k]);
        }
        out
    }

    /// Finite-difference derivative of a scalar field sampled on the grid.
    pub fn scalar_derivative(&self, values: &[f64], i: usize, j: usize, alpha: usize) -> f64 {
        self.stencil(i, j, alpha)
            .into_iter()
            .map(|(k, w)| w * values[k])
            .sum()
    }

    fn stencil(&self, i: usize, j: usize, alpha: usize) -> Vec<(usize, f64)> {
        let (len, pos, h) = if alpha == 0 {
            (self.taus.len(), i, self.taus[1] - self.taus[0])
        } else {
            (self.sigmas.len(), j, self.sigmas[1] - self.sigmas[0])
        };
        let (start, weights) = stencil_weights(len, pos);
        weights
            .iter()
            .enumerate()
            .map(|(o, &w)| {
                let k = start + o;
                let idx = if alpha == 0 { self.index(k, j) } else { self.index(i, k) };
                (idx, w / h)
            })
            .collect()
    }

    /// Trapezoid weight of a node.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let ht = self.taus[1] - self.taus[0];
        let hs = self.sigmas[1] - self.sigmas[0];
        let wt = if i == 0 || i + 1 == self.taus.len() { 0.5 } else { 1.0 };
        let ws = if j == 0 || j + 1 == self.sigmas.len() { 0.5 } else { 1.0 };
        ht * hs * wt * ws
    }
}

/// First index and weights (in units of 1/h) of the difference stencil.
fn stencil_weights(len: usize, pos: usize) -> (usize, &'static [f64]) {
    const C2: [f64; 3] = [-0.5, 0.0, 0.5];
    const F2: [f64; 3] = [-1.5, 2.0, -0.5];
    const B2: [f64; 3] = [0.5, -2.0, 1.5];
    const C4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    const F4: [f64; 5] = [-25.0 / 12.0, 48.0 / 12.0, -36.0 / 12.0, 16.0 / 12.0, -3.0 / 12.0];
    const F4B: [f64; 5] = [-3.0 / 12.0, -10.0 / 12.0, 18.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];
    const B4: [f64; 5] = [3.0 / 12.0, -16.0 / 12.0, 36.0 / 12.0, -48.0 / 12.0, 25.0 / 12.0];
    const B4B: [f64; 5] = [-1.0 / 12.0, 6.0 / 12.0, -18.0 / 12.0, 10.0 / 12.0, 3.0 / 12.0];
    if len < 5 {
        return match pos {
            0 => (0, &F2),
            p if p == len - 1 => (len - 3, &B2),
            p => (p - 1, &C2),
        };
    }
    match pos {
        0 => (0, &F4),
        1 => (0, &F4B),
        p if p == len - 1 => (len - 5, &B4),
        p if p == len - 2 => (len - 5, &B4B),
        p => (p - 2, &C4),
    }
}

/// Smooth test field over f-type generators with exact derivatives:
/// `c = exp(i w sigma)(c0 + tau a) + eps (sin(tau + 2 sigma) q1 + tau sigma q2)`
/// with `a = 0.8 c0 + 0.1 q0` and Gaussian random spinors c0, q0, q1, q2.
#[derive(Clone, Debug)]
pub struct SmoothField {
    pub c0: SpinorField,
    pub a: SpinorField,
    pub q1: SpinorField,
    pub q2: SpinorField,
    pub winding: f64,
    pub eps: f64,
}

impl SmoothField {
    pub fn random(ctx: &Arc<AlgebraContext>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spinor = || {
            let comp = |rng: &mut ChaCha8Rng| {
                let mut v = CVector::zero(ctx);
                for i in 1..=ctx.n() {
                    let z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    v.axpy(z, &CVector::f(ctx, i));
                }
                v
            };
            let a = comp(&mut rng);
            let b = comp(&mut rng);
            SpinorField::new(a, b)
        };
        let c0 = spinor();
        let q0 = spinor();
        let q1 = spinor();
        let q2 = spinor();
        let mut a = c0.scale(C64::new(0.8, 0.0));
        a.axpy(C64::new(0.1, 0.0), &q0);
        SmoothField {
            c0,
            a,
            q1,
            q2,
            winding: 1.0,
            eps: 0.1,
        }
    }

    pub fn eval(&self, tau: f64, sigma: f64) -> (SpinorField, [SpinorField; 2]) {
        let ph = C64::new(0.0, self.winding * sigma).exp();
        let mut base = self.c0.clone();
        base.axpy(C64::new(tau, 0.0), &self.a);
        let s = (tau + 2.0 * sigma).sin();
        let co = (tau + 2.0 * sigma).cos();
        let mut c = base.scale(ph);
        c.axpy(C64::new(self.eps * s, 0.0), &self.q1);
        c.axpy(C64::new(self.eps * tau * sigma, 0.0), &self.q2);
        let mut dt = self.a.scale(ph);
        dt.axpy(C64::new(self.eps * co, 0.0), &self.q1);
        dt.axpy(C64::new(self.eps * sigma, 0.0), &self.q2);
        let mut ds = base.scale(ph * C64::new(0.0, self.winding));
        ds.axpy(C64::new(2.0 * self.eps * co, 0.0), &self.q1);
        ds.axpy(C64::new(self.eps * tau, 0.0), &self.q2);
        (c, [dt, ds])
    }

    pub fn grid(&self, ctx: &Arc<AlgebraContext>, n_tau: usize, n_sigma: usize) -> Result<WorldsheetGrid> {
        WorldsheetGrid::from_fn_with_derivatives(
            ctx,
            linspace(0.0, 1.0, n_tau),
            linspace(0.0, 1.0, n_sigma),
            |t, s| self.eval(t, s),
        )
    }
}
