//! Complexified grade-1 elements of Cl(2n, 2n), their metric inner product and
//! a small multivector engine used to cross-check it.

mod algebra;
mod multivector;

pub use algebra::{
    combine, inner, make_algebra, pair_basis, AlgebraContext, CVector, MAX_COMPLEX_DIM,
    MAX_MULTIVECTOR_N,
};
pub use multivector::{blade_product, geometric_product, symmetrized_product, Multivector};
