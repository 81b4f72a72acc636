use std::f64::consts::PI;
use std::sync::Arc;

use crate::clifford::{AlgebraContext, CVector};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMat, C64};

/// Gaussian delta sequence `(n / sqrt(pi)) exp(-n^2 s^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaSequence {
    pub n: f64,
}

impl DeltaSequence {
    pub fn new(n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::Validation("delta sequence index must be positive".into()));
        }
        Ok(DeltaSequence { n })
    }

    pub fn value(&self, s: f64) -> f64 {
        self.n / PI.sqrt() * (-self.n * self.n * s * s).exp()
    }

    /// Trapezoid integral of `delta(s - s0)` over uniform nodes.
    pub fn grid_integral(&self, nodes: &[f64], s0: f64) -> f64 {
        nodes
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0] - s0) + self.value(w[1] - s0)))
            .sum()
    }
}

/// Coefficient functions `g_i(sigma)` sampled on the sigma nodes, one row per
/// node and one column per mode.
pub fn gaussian_packets(n: f64, centers: &[f64], sigmas: &[f64]) -> CMat {
    let ds = if centers.len() > 1 {
        centers[1] - centers[0]
    } else {
        1.0
    };
    let amp = ds.sqrt() * n * (2.0 / PI).sqrt();
    CMat::from_fn(sigmas.len(), centers.len(), |a, i| {
        let d = sigmas[a] - centers[i];
        C64::new(amp * (-2.0 * n * n * d * d).exp(), 0.0)
    })
}

/// `f^p(sigma) = sum_i g_i(sigma) e^p_i` with `e^1_i = e_i` (sign -1) and
/// `e^2_i = f_i` (sign +1).
#[derive(Clone, Debug)]
pub struct StringModeSet {
    ctx: Arc<AlgebraContext>,
    pub coefficients: CMat,
    pub modes: Vec<[CVector; 2]>,
}

pub const MODE_SIGNS: [f64; 2] = [-1.0, 1.0];

pub fn build_modes(coefficients: &CMat, ctx: &Arc<AlgebraContext>) -> Result<StringModeSet> {
    let m = coefficients.ncols();
    if m > ctx.n() {
        return Err(Error::Capacity(format!(
            "{m} modes need {m} pairs but the algebra has n = {}",
            ctx.n()
        )));
    }
    let e: Vec<CVector> = (1..=m).map(|i| CVector::e(ctx, i)).collect();
    let f: Vec<CVector> = (1..=m).map(|i| CVector::f(ctx, i)).collect();
    let modes = (0..coefficients.nrows())
        .map(|a| {
            let mut v1 = CVector::zero(ctx);
            let mut v2 = CVector::zero(ctx);
            for i in 0..m {
                v1.axpy(coefficients[(a, i)], &e[i]);
                v2.axpy(coefficients[(a, i)], &f[i]);
            }
            [v1, v2]
        })
        .collect();
    Ok(StringModeSet {
        ctx: ctx.clone(),
        coefficients: coefficients.clone(),
        modes,
    })
}

impl StringModeSet {
    pub fn nodes(&self) -> usize {
        self.modes.len()
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        &self.ctx
    }

    /// `f^p(sigma_a) . conj(f^q(sigma_b))`.
    pub fn gram(&self, p: usize, q: usize) -> CMat {
        let k = self.nodes();
        CMat::from_fn(k, k, |a, b| self.modes[a][p].dot_conj(&self.modes[b][q]))
    }

    /// `f^p(sigma_a) . f^q(sigma_b)`.
    pub fn plain_gram(&self, p: usize, q: usize) -> CMat {
        let k = self.nodes();
        CMat::from_fn(k, k, |a, b| self.modes[a][p].dot(&self.modes[b][q]))
    }

    /// Largest deviation of the starred Gram from
    /// `sign(p) delta^{pq} delta_n(sigma - sigma')`.
    pub fn delta_deviation(&self, delta: &DeltaSequence, sigmas: &[f64]) -> f64 {
        let k = self.nodes();
        let target = CMat::from_fn(k, k, |a, b| C64::new(delta.value(sigmas[a] - sigmas[b]), 0.0));
        let mut worst: f64 = 0.0;
        for p in 0..2 {
            for q in 0..2 {
                let g = self.gram(p, q);
                let t = if p == q {
                    &target * C64::new(MODE_SIGNS[p], 0.0)
                } else {
                    CMat::zeros(k, k)
                };
                worst = worst.max(max_abs(&(g - t)));
            }
        }
        worst
    }

    /// Largest entry of the unstarred Gram.
    pub fn plain_gram_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..2 {
            for q in 0..2 {
                worst = worst.max(max_abs(&self.plain_gram(p, q)));
            }
        }
        worst
    }

    /// Node-space transformation `U = G W G^+` induced by a mode-space
    /// unitary W. It satisfies `U K U^dagger = K` for the Gram K.
    pub fn pseudo_unitary(&self, w: &CMat) -> Result<CMat> {
        let g = &self.coefficients;
        if w.nrows() != g.ncols() || !w.is_square() {
            return Err(Error::Dimension {
                expected: g.ncols(),
                got: w.nrows(),
            });
        }
        let pinv = g
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Validation(format!("pseudo-inverse failed: {e}")))?;
        Ok(g * w * pinv)
    }

    /// `f(sigma_a) -> sum_b U_ab f(sigma_b)`.
    pub fn transform(&self, u: &CMat) -> Result<StringModeSet> {
        let k = self.nodes();
        if u.nrows() != k || u.ncols() != k {
            return Err(Error::Dimension {
                expected: k,
                got: u.nrows(),
            });
        }
        build_modes(&(u * &self.coefficients), &self.ctx)
    }
}
