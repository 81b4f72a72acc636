use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Upper bound on the number of complex dimensions accepted by
/// [`make_algebra`]. Grade-1 work is dense in 4n coefficients, so this is a
/// memory guard rather than a structural limit.
pub const MAX_COMPLEX_DIM: usize = 4096;

/// Largest n for which the multivector engine can index blades in a u64.
pub const MAX_MULTIVECTOR_N: usize = 16;

/// The real Clifford algebra Cl(2n, 2n) with complexified grade-1 space.
///
/// Generators are numbered 0..4n. The first 2n square to +2 (the g's), the
/// remaining 2n square to -2 (the h's).
#[derive(Debug, PartialEq, Eq)]
pub struct AlgebraContext {
    n: usize,
    metric_signs: Vec<i8>,
}

pub fn make_algebra(n: usize) -> Result<Arc<AlgebraContext>> {
    if n == 0 {
        return Err(Error::Validation("algebra needs n >= 1".into()));
    }
    if n > MAX_COMPLEX_DIM {
        return Err(Error::Capacity(format!(
            "n = {n} exceeds the supported maximum {MAX_COMPLEX_DIM}"
        )));
    }
    let mut metric_signs = vec![1i8; 2 * n];
    metric_signs.extend(std::iter::repeat_n(-1i8, 2 * n));
    Ok(Arc::new(AlgebraContext { n, metric_signs }))
}

impl AlgebraContext {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator_count(&self) -> usize {
        4 * self.n
    }

    pub fn metric_signs(&self) -> &[i8] {
        &self.metric_signs
    }

    /// Square of generator `k`, i.e. `2 * sign`.
    #[inline]
    pub fn metric(&self, k: usize) -> f64 {
        2.0 * self.metric_signs[k] as f64
    }
}

/// A grade-1 element with complex coefficients on the 4n generators.
#[derive(Clone, PartialEq)]
pub struct CVector {
    ctx: Arc<AlgebraContext>,
    coeffs: Vec<C64>,
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CVector")
            .field("n", &self.ctx.n)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl CVector {
    pub fn zero(ctx: &Arc<AlgebraContext>) -> Self {
        CVector {
            ctx: ctx.clone(),
            coeffs: vec![C64::new(0.0, 0.0); ctx.generator_count()],
        }
    }

    pub fn from_coeffs(ctx: &Arc<AlgebraContext>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != ctx.generator_count() {
            return Err(Error::Dimension {
                expected: ctx.generator_count(),
                got: coeffs.len(),
            });
        }
        Ok(CVector {
            ctx: ctx.clone(),
            coeffs,
        })
    }

    /// Generator `g_i` for i in 1..=2n.
    pub fn g(ctx: &Arc<AlgebraContext>, i: usize) -> Self {
        assert!((1..=2 * ctx.n).contains(&i), "g index {i} out of range");
        let mut v = Self::zero(ctx);
        v.coeffs[i - 1] = C64::new(1.0, 0.0);
        v
    }

    /// Generator `h_i` for i in 1..=2n.
    pub fn h(ctx: &Arc<AlgebraContext>, i: usize) -> Self {
        assert!((1..=2 * ctx.n).contains(&i), "h index {i} out of range");
        let mut v = Self::zero(ctx);
        v.coeffs[2 * ctx.n + i - 1] = C64::new(1.0, 0.0);
        v
    }

    /// `e_i = (h_i - i h_{n+i}) / 2` for i in 1..=n. Satisfies `e.e* = -1`.
    pub fn e(ctx: &Arc<AlgebraContext>, i: usize) -> Self {
        assert!((1..=ctx.n).contains(&i), "e index {i} out of range");
        let n = ctx.n;
        let mut v = Self::zero(ctx);
        v.coeffs[2 * n + i - 1] = C64::new(0.5, 0.0);
        v.coeffs[3 * n + i - 1] = C64::new(0.0, -0.5);
        v
    }

    /// `f_i = (g_i - i g_{n+i}) / 2` for i in 1..=n. Satisfies `f.f* = +1`.
    pub fn f(ctx: &Arc<AlgebraContext>, i: usize) -> Self {
        assert!((1..=ctx.n).contains(&i), "f index {i} out of range");
        let n = ctx.n;
        let mut v = Self::zero(ctx);
        v.coeffs[i - 1] = C64::new(0.5, 0.0);
        v.coeffs[n + i - 1] = C64::new(0.0, -0.5);
        v
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Complex conjugate. The generators are real, so only the coefficients
    /// are conjugated.
    pub fn conj(&self) -> Self {
        CVector {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Metric inner product. Panics when the contexts differ; use [`inner`]
    /// for a checked version.
    #[inline]
    pub fn dot(&self, other: &CVector) -> C64 {
        self.assert_same(other);
        let n2 = 2 * self.ctx.n;
        let (pos_a, neg_a) = self.coeffs.split_at(n2);
        let (pos_b, neg_b) = other.coeffs.split_at(n2);
        let mut p = C64::new(0.0, 0.0);
        for (a, b) in pos_a.iter().zip(pos_b) {
            p += a * b;
        }
        let mut q = C64::new(0.0, 0.0);
        for (a, b) in neg_a.iter().zip(neg_b) {
            q += a * b;
        }
        (p - q) * 2.0
    }

    /// `self . conj(other)`.
    #[inline]
    pub fn dot_conj(&self, other: &CVector) -> C64 {
        self.assert_same(other);
        let n2 = 2 * self.ctx.n;
        let (pos_a, neg_a) = self.coeffs.split_at(n2);
        let (pos_b, neg_b) = other.coeffs.split_at(n2);
        let mut p = C64::new(0.0, 0.0);
        for (a, b) in pos_a.iter().zip(pos_b) {
            p += a * b.conj();
        }
        let mut q = C64::new(0.0, 0.0);
        for (a, b) in neg_a.iter().zip(neg_b) {
            q += a * b.conj();
        }
        (p - q) * 2.0
    }

    /// Euclidean norm of the coefficient array.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn axpy(&mut self, a: C64, x: &CVector) {
        self.assert_same(x);
        for (y, xv) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * xv;
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        CVector {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|z| z * a).collect(),
        }
    }

    pub fn same_context(&self, other: &CVector) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx.n == other.ctx.n
    }

    fn assert_same(&self, other: &CVector) {
        assert!(
            self.same_context(other),
            "CVector context mismatch: n = {} vs n = {}",
            self.ctx.n,
            other.ctx.n
        );
    }
}

/// Checked metric inner product `a . b`.
pub fn inner(a: &CVector, b: &CVector) -> Result<C64> {
    if !a.same_context(b) {
        return Err(Error::ContextMismatch {
            left: a.ctx.n,
            right: b.ctx.n,
        });
    }
    Ok(a.dot(b))
}

/// Linear combination `sum_k w_k v_k`.
pub fn combine(ctx: &Arc<AlgebraContext>, terms: &[(C64, &CVector)]) -> CVector {
    let mut out = CVector::zero(ctx);
    for (w, v) in terms {
        out.axpy(*w, v);
    }
    out
}

impl Add<&CVector> for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for CVector {
    type Output = CVector;
    fn add(mut self, rhs: CVector) -> CVector {
        self += &rhs;
        self
    }
}

impl Sub<&CVector> for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for CVector {
    type Output = CVector;
    fn sub(mut self, rhs: CVector) -> CVector {
        self -= &rhs;
        self
    }
}

impl AddAssign<&CVector> for CVector {
    fn add_assign(&mut self, rhs: &CVector) {
        self.assert_same(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&CVector> for CVector {
    fn sub_assign(&mut self, rhs: &CVector) {
        self.assert_same(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &CVector {
    type Output = CVector;
    fn neg(self) -> CVector {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &CVector {
    type Output = CVector;
    fn mul(self, rhs: C64) -> CVector {
        self.scale(rhs)
    }
}

impl Mul<f64> for &CVector {
    type Output = CVector;
    fn mul(self, rhs: f64) -> CVector {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for CVector {
    type Output = CVector;
    fn mul(mut self, rhs: C64) -> CVector {
        self.coeffs.iter_mut().for_each(|z| *z *= rhs);
        self
    }
}

impl Mul<f64> for CVector {
    type Output = CVector;
    fn mul(mut self, rhs: f64) -> CVector {
        self.coeffs.iter_mut().for_each(|z| *z *= rhs);
        self
    }
}

/// The pair basis for a context, `(e_i, f_i)` for i in 1..=n.
pub fn pair_basis(ctx: &Arc<AlgebraContext>) -> (Vec<CVector>, Vec<CVector>) {
    let e = (1..=ctx.n()).map(|i| CVector::e(ctx, i)).collect();
    let f = (1..=ctx.n()).map(|i| CVector::f(ctx, i)).collect();
    (e, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_layout() {
        let ctx = make_algebra(2).unwrap();
        assert_eq!(ctx.metric_signs(), &[1, 1, 1, 1, -1, -1, -1, -1]);
        assert_eq!(ctx.generator_count(), 8);
    }

    #[test]
    fn zero_n_rejected() {
        assert!(make_algebra(0).is_err());
        assert!(matches!(
            make_algebra(MAX_COMPLEX_DIM + 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn generator_squares() {
        let ctx = make_algebra(3).unwrap();
        for i in 1..=6 {
            assert_eq!(CVector::g(&ctx, i).dot(&CVector::g(&ctx, i)), C64::new(2.0, 0.0));
            assert_eq!(CVector::h(&ctx, i).dot(&CVector::h(&ctx, i)), C64::new(-2.0, 0.0));
        }
    }

    #[test]
    fn pair_basis_relations() {
        let ctx = make_algebra(3).unwrap();
        let (e, f) = pair_basis(&ctx);
        let zero = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert_eq!(e[i].dot(&e[j]), zero);
                assert_eq!(f[i].dot(&f[j]), zero);
                assert_eq!(e[i].dot(&f[j]), zero);
                assert_eq!(e[i].dot(&e[j].conj()), C64::new(-d, 0.0));
                assert_eq!(f[i].dot(&f[j].conj()), C64::new(d, 0.0));
                assert_eq!(e[i].dot(&f[j].conj()), zero);
            }
        }
    }

    #[test]
    fn mismatched_contexts() {
        let a = CVector::g(&make_algebra(1).unwrap(), 1);
        let b = CVector::g(&make_algebra(2).unwrap(), 1);
        assert!(matches!(
            inner(&a, &b),
            Err(Error::ContextMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn conj_dot_agrees_with_explicit_conjugate() {
        let ctx = make_algebra(2).unwrap();
        let a = &CVector::e(&ctx, 1) * C64::new(0.3, 1.1) + &CVector::f(&ctx, 2) * C64::new(-2.0, 0.5);
        let b = &CVector::g(&ctx, 3) * C64::new(0.7, -0.2) + &CVector::e(&ctx, 2) * C64::new(1.0, 1.0);
        assert!((a.dot_conj(&b) - a.dot(&b.conj())).norm() < 1e-15);
    }
}
