//! Dense complex linear algebra helpers shared by the ensemble, matrix and
//! worldsheet modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Commutator restricted to the rows and columns listed in `idx`.
pub fn commutator_block(a: &CMat, b: &CMat, idx: &[usize]) -> CMat {
    let k = idx.len();
    let mut out = CMat::zeros(k, k);
    let n = a.ncols();
    for (r, &i) in idx.iter().enumerate() {
        for (s, &j) in idx.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n {
                acc += a[(i, l)] * b[(l, j)] - b[(i, l)] * a[(l, j)];
            }
            out[(r, s)] = acc;
        }
    }
    out
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tol * max_abs(m).max(1.0)
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn check_unitary(u: &CMat, tol: f64) -> Result<()> {
    if !u.is_square() {
        return Err(Error::Dimension {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    let r = unitarity_residual(u);
    if r > tol {
        return Err(Error::NonUnitary(r));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending
/// order. Ties keep the order returned by the solver.
pub fn hermitian_eigen_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// exp(i * scale * H) for Hermitian H, built from its spectral decomposition.
pub fn expi_hermitian(h: &CMat, scale: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = CMat::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| (I * scale * l).exp()),
    ));
    v * d * v.adjoint()
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix with the phases of R divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_gaussian_matrix(rng, n, n);
    (&g + g.adjoint()) * re(0.5)
}

/// Hermitian matrix U diag(eigenvalues) U^dagger with a random unitary U.
pub fn random_hermitian_with_spectrum<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> CMat {
    let n = eigenvalues.len();
    let u = random_unitary(rng, n);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        n,
        eigenvalues.iter().map(|&l| re(l)),
    ));
    &u * d * u.adjoint()
}

pub fn is_diagonal(m: &CMat) -> bool {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)] != C64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..8 {
            let u = random_unitary(&mut rng, n);
            assert!(unitarity_residual(&u) < 1e-13);
        }
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, 5);
        let (vals, vecs) = hermitian_eigen_desc(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMat::from_diagonal(&DVector::from_iterator(5, vals.iter().map(|&l| re(l))));
        let back = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(back - h)) < 1e-12);
    }

    #[test]
    fn expi_matches_pade_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 6);
        let a = expi_hermitian(&h, 0.3);
        let b = (&h * (I * 0.3)).exp();
        assert!(max_abs(&(a - b)) < 1e-12);
    }

    #[test]
    fn block_commutator_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_hermitian(&mut rng, 6);
        let b = random_hermitian(&mut rng, 6);
        let full = commutator(&a, &b);
        let idx = [1, 3, 4];
        let blk = commutator_block(&a, &b, &idx);
        for (r, &i) in idx.iter().enumerate() {
            for (s, &j) in idx.iter().enumerate() {
                assert!((blk[(r, s)] - full[(i, j)]).norm() < 1e-13);
            }
        }
    }
}
