use std::collections::BTreeMap;
use std::sync::Arc;

use super::algebra::{AlgebraContext, CVector, MAX_MULTIVECTOR_N};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Sparse multivector. Blades are bitmasks over the 4n generators with the
/// generator order as the canonical ordering.
#[derive(Clone, Debug)]
pub struct Multivector {
    ctx: Arc<AlgebraContext>,
    terms: BTreeMap<u64, C64>,
}

fn check_capacity(ctx: &AlgebraContext) -> Result<()> {
    if ctx.n() > MAX_MULTIVECTOR_N {
        return Err(Error::Capacity(format!(
            "multivector products need 4n <= 64 generators, got n = {}",
            ctx.n()
        )));
    }
    Ok(())
}

/// Sign of moving blade `b` past blade `a` into canonical order.
fn reorder_sign(a: u64, b: u64) -> f64 {
    let mut a = a >> 1;
    let mut swaps = 0u32;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Product of two basis blades: returns the resulting blade and its factor.
pub fn blade_product(ctx: &AlgebraContext, a: u64, b: u64) -> (u64, f64) {
    let mut factor = reorder_sign(a, b);
    let mut common = a & b;
    while common != 0 {
        let k = common.trailing_zeros() as usize;
        factor *= ctx.metric(k);
        common &= common - 1;
    }
    (a ^ b, factor)
}

impl Multivector {
    pub fn zero(ctx: &Arc<AlgebraContext>) -> Result<Self> {
        check_capacity(ctx)?;
        Ok(Multivector {
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
        })
    }

    pub fn scalar(ctx: &Arc<AlgebraContext>, s: C64) -> Result<Self> {
        let mut m = Self::zero(ctx)?;
        if s != C64::new(0.0, 0.0) {
            m.terms.insert(0, s);
        }
        Ok(m)
    }

    pub fn from_vector(v: &CVector) -> Result<Self> {
        let mut m = Self::zero(v.context())?;
        for (k, z) in v.coeffs().iter().enumerate() {
            if *z != C64::new(0.0, 0.0) {
                m.terms.insert(1u64 << k, *z);
            }
        }
        Ok(m)
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, C64)> + '_ {
        self.terms.iter().map(|(&b, &z)| (b, z))
    }

    pub fn coefficient(&self, blade: u64) -> C64 {
        self.terms.get(&blade).copied().unwrap_or_default()
    }

    pub fn scalar_part(&self) -> C64 {
        self.coefficient(0)
    }

    pub fn grade_part(&self, grade: u32) -> Multivector {
        Multivector {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| b.count_ones() == grade)
                .map(|(&b, &z)| (b, z))
                .collect(),
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector> {
        same(self, other)?;
        let mut out = self.clone();
        for (&b, &z) in &other.terms {
            *out.terms.entry(b).or_default() += z;
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Multivector {
        Multivector {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(&b, &z)| (b, z * s)).collect(),
        }
    }
}

fn same(a: &Multivector, b: &Multivector) -> Result<()> {
    if a.ctx.n() != b.ctx.n() {
        return Err(Error::ContextMismatch {
            left: a.ctx.n(),
            right: b.ctx.n(),
        });
    }
    Ok(())
}

pub fn geometric_product(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    same(a, b)?;
    let mut terms: BTreeMap<u64, C64> = BTreeMap::new();
    for (&ba, &za) in &a.terms {
        for (&bb, &zb) in &b.terms {
            let (blade, factor) = blade_product(&a.ctx, ba, bb);
            *terms.entry(blade).or_default() += za * zb * factor;
        }
    }
    Ok(Multivector {
        ctx: a.ctx.clone(),
        terms,
    })
}

/// `(ab + ba) / 2`.
pub fn symmetrized_product(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    let ab = geometric_product(a, b)?;
    let ba = geometric_product(b, a)?;
    Ok(ab.add(&ba)?.scale(C64::new(0.5, 0.0)))
}
