//! Two-component spinor notation over Clifford vectors: the four-vector to
//! Hermitian-spinor map, index raising and lowering, and the resolution of
//! Hermitian matrices and phase-space points into Clifford spinor fields.

use std::ops::{Add, Sub};
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::clifford::{AlgebraContext, CVector};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen_desc, is_diagonal, is_hermitian, CMat, C64};

pub type Spinor2 = Matrix2<C64>;

/// Minkowski metric diagonal, signature (+, -, -, -).
pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Complex dimensions used by one resolved phase-space point: two pairs for
/// x, two for p and one for the shift that carries mu.
pub const PAIRS_PER_PARTICLE: usize = 5;

/// Contravariant four-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector([t, x, y, z])
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn dot(&self, other: &FourVector) -> f64 {
        (0..4).map(|m| ETA[m] * self.0[m] * other.0[m]).sum()
    }

    pub fn lower(&self) -> [f64; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }

    pub fn scale(&self, s: f64) -> Self {
        FourVector(self.0.map(|v| v * s))
    }

    pub fn max_abs_diff(&self, other: &FourVector) -> f64 {
        (0..4).fold(0.0, |a, m| a.max((self.0[m] - other.0[m]).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector([0, 1, 2, 3].map(|m| self.0[m] + o.0[m]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector([0, 1, 2, 3].map(|m| self.0[m] - o.0[m]))
    }
}

fn z(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// sigma_0 = 1 and the Pauli matrices.
pub fn pauli(mu: usize) -> Spinor2 {
    match mu {
        0 => Spinor2::new(z(1., 0.), z(0., 0.), z(0., 0.), z(1., 0.)),
        1 => Spinor2::new(z(0., 0.), z(1., 0.), z(1., 0.), z(0., 0.)),
        2 => Spinor2::new(z(0., 0.), z(0., -1.), z(0., 1.), z(0., 0.)),
        3 => Spinor2::new(z(1., 0.), z(0., 0.), z(0., 0.), z(-1., 0.)),
        _ => panic!("pauli index {mu} out of range"),
    }
}

/// The antisymmetric spinor metric with eps_{01} = eps^{01} = 1.
pub fn epsilon() -> Spinor2 {
    Spinor2::new(z(0., 0.), z(1., 0.), z(-1., 0.), z(0., 0.))
}

/// `V_{AB} = V^{CD} eps_{CA} eps_{DB}`.
pub fn lower_indices(m: &Spinor2) -> Spinor2 {
    let e = epsilon();
    e.transpose() * m * e
}

/// `V^{AB} = eps^{AC} eps^{BD} V_{CD}`.
pub fn raise_indices(m: &Spinor2) -> Spinor2 {
    let e = epsilon();
    e * m * e.transpose()
}

/// `(1/2) tr(sigma_mu M)` for each mu; the inverse of the Pauli map on any
/// complex 2x2 matrix.
pub fn contract_sigma(m: &Spinor2) -> [C64; 4] {
    [0, 1, 2, 3].map(|mu| (pauli(mu) * m).trace() * 0.5)
}

/// A 2x2 Hermitian matrix carrying one undotted and one dotted index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianSpinor(Spinor2);

impl HermitianSpinor {
    pub fn new(m: Spinor2) -> Result<Self> {
        let scale = m.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
        let r = (m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if r > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "spinor is not Hermitian (residual {r:.3e})"
            )));
        }
        Ok(HermitianSpinor(m))
    }

    pub fn matrix(&self) -> &Spinor2 {
        &self.0
    }

    pub fn det(&self) -> f64 {
        self.0.determinant().re
    }
}

pub fn to_spinor(v: &FourVector) -> HermitianSpinor {
    let [v0, v1, v2, v3] = v.0;
    HermitianSpinor(Spinor2::new(
        z(v0 + v3, 0.),
        z(v1, -v2),
        z(v1, v2),
        z(v0 - v3, 0.),
    ))
}

pub fn from_spinor(s: &HermitianSpinor) -> FourVector {
    FourVector(contract_sigma(&s.0).map(|c| c.re))
}

/// Maximum deviation from `V_{AE} V^{BE} = (1/2) delta_A^B V_{FE} V^{FE}`.
pub fn four_vector_rule_residual(s: &HermitianSpinor) -> f64 {
    let upper = s.0;
    let low = lower_indices(&upper);
    let lhs = low * upper.transpose();
    let half_trace = lhs.trace() * 0.5;
    let rhs = Spinor2::identity() * half_trace;
    (lhs - rhs).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// A two-component spinor whose components are Clifford vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub comps: [CVector; 2],
}

impl SpinorField {
    pub fn new(c0: CVector, c1: CVector) -> Self {
        assert!(c0.same_context(&c1), "spinor components from different algebras");
        SpinorField { comps: [c0, c1] }
    }

    pub fn zero(ctx: &Arc<AlgebraContext>) -> Self {
        SpinorField {
            comps: [CVector::zero(ctx), CVector::zero(ctx)],
        }
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        self.comps[0].context()
    }

    pub fn conj(&self) -> Self {
        SpinorField {
            comps: [self.comps[0].conj(), self.comps[1].conj()],
        }
    }

    /// `c_B = c^C eps_{CB}`.
    pub fn lowered(&self) -> Self {
        SpinorField {
            comps: [-&self.comps[1], self.comps[0].clone()],
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        SpinorField {
            comps: [self.comps[0].scale(a), self.comps[1].scale(a)],
        }
    }

    pub fn axpy(&mut self, a: C64, x: &SpinorField) {
        self.comps[0].axpy(a, &x.comps[0]);
        self.comps[1].axpy(a, &x.comps[1]);
    }

    pub fn add(&self, other: &SpinorField) -> Self {
        SpinorField {
            comps: [&self.comps[0] + &other.comps[0], &self.comps[1] + &other.comps[1]],
        }
    }

    pub fn sub(&self, other: &SpinorField) -> Self {
        SpinorField {
            comps: [&self.comps[0] - &other.comps[0], &self.comps[1] - &other.comps[1]],
        }
    }

    /// Largest coefficient-norm of the two components.
    pub fn coeff_norm(&self) -> f64 {
        self.comps[0].coeff_norm().max(self.comps[1].coeff_norm())
    }
}

/// `M_{AB} = a_A . conj(b_B)`.
pub fn gram_conj(a: &SpinorField, b: &SpinorField) -> Spinor2 {
    Spinor2::from_fn(|i, j| a.comps[i].dot_conj(&b.comps[j]))
}

/// `M_{AB} = a_A . b_B`.
pub fn gram(a: &SpinorField, b: &SpinorField) -> Spinor2 {
    Spinor2::from_fn(|i, j| a.comps[i].dot(&b.comps[j]))
}

/// `w^A = M^{AB} v_B` for a numeric 2x2 matrix acting on a spinor field.
pub fn apply_matrix(m: &Spinor2, v: &SpinorField) -> SpinorField {
    let ctx = v.context();
    let mut out = SpinorField::zero(ctx);
    for a in 0..2 {
        for b in 0..2 {
            out.comps[a].axpy(m[(a, b)], &v.comps[b]);
        }
    }
    out
}

/// Position spinor `c^A` and momentum spinor `d*_A` of one particle.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub c: SpinorField,
    pub d_star: SpinorField,
}

impl PhasePoint {
    pub fn context(&self) -> &Arc<AlgebraContext> {
        self.c.context()
    }

    /// `x^{AB} = c^A . c*^B`.
    pub fn x_spinor(&self) -> Spinor2 {
        gram_conj(&self.c, &self.c)
    }

    pub fn x(&self) -> FourVector {
        from_spinor(&HermitianSpinor(self.x_spinor()))
    }

    /// `p_{AB} = d*_A . d_B`.
    pub fn p_spinor_lower(&self) -> Spinor2 {
        gram_conj(&self.d_star, &self.d_star)
    }

    pub fn p_spinor_upper(&self) -> Spinor2 {
        raise_indices(&self.p_spinor_lower())
    }

    pub fn p(&self) -> FourVector {
        from_spinor(&HermitianSpinor(self.p_spinor_upper()))
    }

    /// `(1/2) sum_E d*_E . c^E`.
    pub fn mu_complex(&self) -> C64 {
        (self.d_star.comps[0].dot(&self.c.comps[0]) + self.d_star.comps[1].dot(&self.c.comps[1]))
            * 0.5
    }

    pub fn mu(&self) -> f64 {
        self.mu_complex().re
    }

    /// `N_A^B = d*_A . c^B`.
    pub fn noether_matrix(&self) -> Spinor2 {
        gram(&self.d_star, &self.c)
    }

    /// Deviation of `d*_A . c^B` from `mu delta_A^B`.
    pub fn noether_condition_residual(&self) -> f64 {
        let n = self.noether_matrix();
        let mu = self.mu();
        (n - Spinor2::identity() * C64::new(mu, 0.0))
            .iter()
            .fold(0.0, |a, z| a.max(z.norm()))
    }
}

fn check_square_hermitian(h: &CMat) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Dimension {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    if !is_hermitian(h, 1e-12) {
        return Err(Error::Validation("matrix is not Hermitian".into()));
    }
    Ok(())
}

/// Clifford vectors `c_i` with `c_i . c_j* = H_ij`, for a Hermitian H of
/// size `ctx.n()`. Positive eigen-directions are carried by f-type vectors,
/// negative ones by e-type vectors and null ones by `e_k + f_k`.
pub fn resolve_hermitian(h: &CMat, ctx: &Arc<AlgebraContext>) -> Result<Vec<CVector>> {
    check_square_hermitian(h)?;
    if h.nrows() != ctx.n() {
        return Err(Error::Dimension {
            expected: ctx.n(),
            got: h.nrows(),
        });
    }
    resolve_hermitian_sector(h, ctx, 0)
}

/// As [`resolve_hermitian`], using pairs `offset+1 ..= offset+size` of a
/// larger algebra.
pub fn resolve_hermitian_sector(
    h: &CMat,
    ctx: &Arc<AlgebraContext>,
    offset: usize,
) -> Result<Vec<CVector>> {
    check_square_hermitian(h)?;
    let size = h.nrows();
    if offset + size > ctx.n() {
        return Err(Error::Capacity(format!(
            "sector of {size} pairs at offset {offset} does not fit n = {}",
            ctx.n()
        )));
    }
    let (vals, vecs) = if is_diagonal(h) {
        ((0..size).map(|i| h[(i, i)].re).collect(), CMat::identity(size, size))
    } else {
        hermitian_eigen_desc(h)
    };
    let scale = vals.iter().fold(1.0_f64, |a, l| a.max(l.abs()));
    let base: Vec<CVector> = vals
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let pair = offset + k + 1;
            if l.abs() <= 1e-12 * scale {
                &CVector::e(ctx, pair) + &CVector::f(ctx, pair)
            } else if l > 0.0 {
                &CVector::f(ctx, pair) * l.sqrt()
            } else {
                &CVector::e(ctx, pair) * (-l).sqrt()
            }
        })
        .collect();
    Ok((0..size)
        .map(|i| {
            let mut v = CVector::zero(ctx);
            for (k, b) in base.iter().enumerate() {
                v.axpy(vecs[(i, k)], b);
            }
            v
        })
        .collect())
}

/// Spinor `c^A` with `c^A . c*^B` equal to the spinor of a future null x.
pub fn resolve_null(x: &FourVector, ctx: &Arc<AlgebraContext>) -> Result<SpinorField> {
    resolve_null_sector(x, ctx, 0)
}

pub fn resolve_null_sector(
    x: &FourVector,
    ctx: &Arc<AlgebraContext>,
    offset: usize,
) -> Result<SpinorField> {
    if offset + 1 > ctx.n() {
        return Err(Error::Capacity(format!(
            "null resolution needs pair {} but n = {}",
            offset + 1,
            ctx.n()
        )));
    }
    let scale = x.max_abs().max(1.0);
    if x.norm2().abs() > 1e-10 * scale * scale {
        return Err(Error::Validation(format!(
            "vector is not null (x.x = {:.3e})",
            x.norm2()
        )));
    }
    if x.0[0] < -1e-12 * scale {
        return Err(Error::Validation("null vector is past-directed".into()));
    }
    let s = to_spinor(x).0;
    let (a, b) = (s[(0, 0)].re.max(0.0), s[(1, 1)].re.max(0.0));
    let psi = if a == 0.0 && b == 0.0 {
        [C64::new(0.0, 0.0); 2]
    } else if a >= b {
        let p0 = a.sqrt();
        [C64::new(p0, 0.0), s[(1, 0)] / p0]
    } else {
        let p1 = b.sqrt();
        [s[(0, 1)] / p1, C64::new(p1, 0.0)]
    };
    let f = CVector::f(ctx, offset + 1);
    Ok(SpinorField::new(f.scale(psi[0]), f.scale(psi[1])))
}

/// Phase-space point with prescribed x, p and Noether-condition value mu.
/// Uses pairs 1..=5 of the algebra.
pub fn resolve_phase_point(
    x: &FourVector,
    p: &FourVector,
    mu: f64,
    ctx: &Arc<AlgebraContext>,
) -> Result<PhasePoint> {
    resolve_phase_point_sector(x, p, mu, ctx, 0)
}

/// As [`resolve_phase_point`] with pairs `offset+1 ..= offset+5`.
pub fn resolve_phase_point_sector(
    x: &FourVector,
    p: &FourVector,
    mu: f64,
    ctx: &Arc<AlgebraContext>,
    offset: usize,
) -> Result<PhasePoint> {
    if offset + PAIRS_PER_PARTICLE > ctx.n() {
        return Err(Error::Capacity(format!(
            "phase-space resolution needs {PAIRS_PER_PARTICLE} pairs at offset {offset}, n = {}",
            ctx.n()
        )));
    }
    if !mu.is_finite() || x.0.iter().chain(p.0.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite phase-space data".into()));
    }
    let a = mu.abs().sqrt();
    let s = if mu < 0.0 { -1.0 } else { 1.0 };
    let shift = Spinor2::new(
        C64::new(mu.abs(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-mu.abs(), 0.0),
    );

    let xr = to_spinor(x).0 - shift;
    let pr = lower_indices(&to_spinor(p).0) - shift;
    let to_dyn = |m: Spinor2| CMat::from_fn(2, 2, |i, j| m[(i, j)]);
    let cx = resolve_hermitian_sector(&to_dyn(xr), ctx, offset)?;
    let q = resolve_hermitian_sector(&to_dyn(pr), ctx, offset + 2)?;

    let fh = CVector::f(ctx, offset + 5);
    let eh = CVector::e(ctx, offset + 5);
    let c0 = &cx[0] + &(&fh * a);
    let c1 = &cx[1] + &(&eh * a);
    let d0 = &q[0] + &(&fh.conj() * (s * a));
    let d1 = &q[1] - &(&eh.conj() * (s * a));
    Ok(PhasePoint {
        c: SpinorField::new(c0, c1),
        d_star: SpinorField::new(d0, d1),
    })
}
