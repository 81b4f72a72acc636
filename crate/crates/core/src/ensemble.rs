//! Ensembles of N particles as ket and bra arrays of Clifford spinors, their
//! Hermitian matrix observables and the U(N) gauge structure.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{make_algebra, AlgebraContext, CVector};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_float};
use crate::linalg::{
    check_unitary, commutator, commutator_block, hermitian_eigen_desc, hermiticity_residual,
    is_hermitian, max_abs, random_gaussian_matrix, CMat, C64, I,
};
use crate::particle::EinbeinProfile;
use crate::spinor::{
    epsilon, pauli, resolve_phase_point_sector, FourVector, PhasePoint, SpinorField, ETA,
    PAIRS_PER_PARTICLE,
};

/// Seed of the random linear combination used by [`gauge_back`].
pub const GAUGE_BACK_SEED: u64 = 0x5eed_0f_ba5e;

/// Initial data for one member of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    pub x: FourVector,
    pub p: FourVector,
    #[serde(default)]
    pub mu: f64,
}

/// Kets `C^A_i`, bras `d*_{iA}`, the weight matrix Phi and the accumulated
/// gauge frame.
#[derive(Clone, Debug)]
pub struct EnsembleState {
    ctx: Arc<AlgebraContext>,
    kets: [Vec<CVector>; 2],
    bras: [Vec<CVector>; 2],
    phi: CMat,
    frame: CMat,
}

fn check_phi(phi: &CMat, n: usize) -> Result<()> {
    if phi.nrows() != n || phi.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: phi.nrows(),
        });
    }
    if !is_hermitian(phi, 1e-12) {
        return Err(Error::Validation("Phi must be Hermitian".into()));
    }
    Ok(())
}

impl EnsembleState {
    /// Resolves each particle into its own five-pair sector of Cl(10N, 10N).
    pub fn resolve(specs: &[ParticleSpec], phi: CMat) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Validation("ensemble needs at least one particle".into()));
        }
        let ctx = make_algebra(PAIRS_PER_PARTICLE * specs.len())?;
        let points = specs
            .iter()
            .enumerate()
            .map(|(i, s)| resolve_phase_point_sector(&s.x, &s.p, s.mu, &ctx, PAIRS_PER_PARTICLE * i))
            .collect::<Result<Vec<_>>>()?;
        Self::from_phase_points(points, phi)
    }

    pub fn from_phase_points(points: Vec<PhasePoint>, phi: CMat) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Validation("ensemble needs at least one particle".into()));
        }
        check_phi(&phi, n)?;
        let ctx = points[0].context().clone();
        if let Some(bad) = points.iter().find(|p| p.context().n() != ctx.n()) {
            return Err(Error::ContextMismatch {
                left: ctx.n(),
                right: bad.context().n(),
            });
        }
        let kets = [0, 1].map(|a| points.iter().map(|p| p.c.comps[a].clone()).collect());
        let bras = [0, 1].map(|a| points.iter().map(|p| p.d_star.comps[a].clone()).collect());
        Ok(EnsembleState {
            ctx,
            kets,
            bras,
            phi,
            frame: CMat::identity(n, n),
        })
    }

    pub fn n(&self) -> usize {
        self.kets[0].len()
    }

    pub fn context(&self) -> &Arc<AlgebraContext> {
        &self.ctx
    }

    pub fn phi(&self) -> &CMat {
        &self.phi
    }

    /// Product of all gauge transformations applied so far.
    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn kets(&self, a: usize) -> &[CVector] {
        &self.kets[a]
    }

    pub fn bras(&self, a: usize) -> &[CVector] {
        &self.bras[a]
    }

    /// The i-th rows of the ket and bra arrays as a phase-space point.
    pub fn particle(&self, i: usize) -> PhasePoint {
        PhasePoint {
            c: SpinorField::new(self.kets[0][i].clone(), self.kets[1][i].clone()),
            d_star: SpinorField::new(self.bras[0][i].clone(), self.bras[1][i].clone()),
        }
    }

    fn block(&self, f: impl Fn(usize, usize) -> C64) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, f)
    }

    /// `(X^{AB})_{ij} = C^A_i . conj(C^B_j)`.
    pub fn x_blocks(&self) -> [[CMat; 2]; 2] {
        [0, 1].map(|a| [0, 1].map(|b| self.block(|i, j| self.kets[a][i].dot_conj(&self.kets[b][j]))))
    }

    /// `(P_{AB})_{ij} = d*_{jA} . d_{iB}`.
    pub fn p_blocks(&self) -> [[CMat; 2]; 2] {
        [0, 1].map(|a| [0, 1].map(|b| self.block(|i, j| self.bras[a][j].dot_conj(&self.bras[b][i]))))
    }

    pub fn observables(&self) -> MatrixObservables {
        let x_up = self.x_blocks();
        let p_low = self.p_blocks();
        let p_up = raise_blocks(&p_low);
        let x = [0, 1, 2, 3].map(|mu| contract_blocks(&x_up, mu));
        let p = [0, 1, 2, 3].map(|mu| contract_blocks(&p_up, mu) * C64::new(ETA[mu], 0.0));
        MatrixObservables { x, p_lower: p }
    }

    /// `(J_AB)_{ij} = c_{iB} . d*_{jA} + c_{iA} . d*_{jB}` with lowered kets,
    /// and `j = i (N - N^dagger)` where `N_{ij} = c^A_i . d*_{jA}`.
    pub fn noether_matrices(&self) -> ([[CMat; 2]; 2], CMat) {
        let lowered: [Vec<CVector>; 2] = [
            self.kets[1].iter().map(|v| -v).collect(),
            self.kets[0].clone(),
        ];
        let j_ab = [0, 1].map(|a| {
            [0, 1].map(|b| {
                self.block(|i, j| lowered[b][i].dot(&self.bras[a][j]) + lowered[a][i].dot(&self.bras[b][j]))
            })
        });
        let nmat = self.block(|i, j| {
            self.kets[0][i].dot(&self.bras[0][j]) + self.kets[1][i].dot(&self.bras[1][j])
        });
        let j = (&nmat - nmat.adjoint()) * I;
        (j_ab, j)
    }

    /// Ensemble charges `Tr(Phi J_AB)` and `Tr(Phi j)`.
    pub fn ensemble_charges(&self) -> ([[C64; 2]; 2], C64) {
        let (j_ab, j) = self.noether_matrices();
        let tr = |m: &CMat| (&self.phi * m).trace();
        ([0, 1].map(|a| [0, 1].map(|b| tr(&j_ab[a][b]))), tr(&j))
    }

    /// `C -> U C`, `d*_j -> sum_h conj(U_jh) d*_h`, `Phi -> U Phi U^dagger`.
    pub fn apply_gauge(&self, u: &CMat) -> Result<Self> {
        let n = self.n();
        if u.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: u.nrows(),
            });
        }
        check_unitary(u, 1e-12)?;
        let mix = |rows: &[CVector], conj: bool| -> Vec<CVector> {
            (0..n)
                .map(|i| {
                    let mut v = CVector::zero(&self.ctx);
                    for (h, r) in rows.iter().enumerate() {
                        let w = if conj { u[(i, h)].conj() } else { u[(i, h)] };
                        v.axpy(w, r);
                    }
                    v
                })
                .collect()
        };
        Ok(EnsembleState {
            ctx: self.ctx.clone(),
            kets: [mix(&self.kets[0], false), mix(&self.kets[1], false)],
            bras: [mix(&self.bras[0], true), mix(&self.bras[1], true)],
            phi: u * &self.phi * u.adjoint(),
            frame: u * &self.frame,
        })
    }

    /// Ket array `P^{AE} D_E` in the current frame.
    pub fn hamiltonian_direction(&self) -> [Vec<CVector>; 2] {
        let p_up = raise_blocks(&self.p_blocks());
        let n = self.n();
        let d: [Vec<CVector>; 2] = [0, 1].map(|e| self.bras[e].iter().map(|v| v.conj()).collect());
        [0, 1].map(|a| {
            (0..n)
                .map(|i| {
                    let mut v = CVector::zero(&self.ctx);
                    for e in 0..2 {
                        for (j, dj) in d[e].iter().enumerate() {
                            v.axpy(p_up[a][e][(i, j)], dj);
                        }
                    }
                    v
                })
                .collect()
        })
    }

    /// Exact free evolution by einbein integral `big_e`.
    pub fn advance(&self, big_e: f64) -> Self {
        let dir = self.hamiltonian_direction();
        let mut out = self.clone();
        for a in 0..2 {
            for (k, v) in out.kets[a].iter_mut().enumerate() {
                v.axpy(C64::new(big_e, 0.0), &dir[a][k]);
            }
        }
        out
    }

    /// `Tr(Phi (dC . D + h.c. - e (P^mu P_mu - m^2)))` on the solution
    /// through this state with einbein value `e`.
    pub fn trace_lagrangian(&self, e: f64, m: f64) -> f64 {
        let dir = self.hamiltonian_direction();
        let n = self.n();
        let kin = self.block(|i, j| {
            (dir[0][i].dot(&self.bras[0][j]) + dir[1][i].dot(&self.bras[1][j])) * e
        });
        let obs = self.observables();
        let shell = obs.mass_shell_operator() - CMat::identity(n, n) * C64::new(m * m, 0.0);
        let total = &kin + kin.adjoint() - shell * C64::new(e, 0.0);
        (&self.phi * total).trace().re
    }

    /// Action over `span` by composite Simpson's rule with `steps` intervals.
    pub fn action_value(&self, e: &EinbeinProfile, m: f64, span: (f64, f64), steps: usize) -> Result<f64> {
        if steps == 0 || steps % 2 != 0 {
            return Err(Error::Validation("Simpson's rule needs an even, positive step count".into()));
        }
        e.validate()?;
        if !(e.min_on(span.0, span.1) > 0.0) {
            return Err(Error::Domain("einbein must be positive on the span".into()));
        }
        let h = (span.1 - span.0) / steps as f64;
        let mut acc = 0.0;
        for k in 0..=steps {
            let tau = span.0 + k as f64 * h;
            let w = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let state = self.advance(e.integral(span.0, tau));
            acc += w * state.trace_lagrangian(e.value(tau), m);
        }
        Ok(acc * h / 3.0)
    }

    /// Ket array of one spinor component as an N x 4n coefficient matrix.
    pub fn ket_matrix(&self, a: usize) -> CMat {
        let g = self.ctx.generator_count();
        CMat::from_fn(self.n(), g, |i, k| self.kets[a][i].coeffs()[k])
    }
}

fn raise_blocks(low: &[[CMat; 2]; 2]) -> [[CMat; 2]; 2] {
    let e = epsilon();
    [0, 1].map(|a| {
        [0, 1].map(|b| {
            let mut acc = CMat::zeros(low[0][0].nrows(), low[0][0].ncols());
            for c in 0..2 {
                for d in 0..2 {
                    let w = e[(a, c)] * e[(b, d)];
                    if w != C64::new(0.0, 0.0) {
                        acc += &low[c][d] * w;
                    }
                }
            }
            acc
        })
    })
}

/// `(1/2) sum_{AB} (sigma_mu)_{BA} M^{AB}` entrywise.
fn contract_blocks(blocks: &[[CMat; 2]; 2], mu: usize) -> CMat {
    let s = pauli(mu);
    let mut acc = CMat::zeros(blocks[0][0].nrows(), blocks[0][0].ncols());
    for a in 0..2 {
        for b in 0..2 {
            let w = s[(b, a)];
            if w != C64::new(0.0, 0.0) {
                acc += &blocks[a][b] * (w * 0.5);
            }
        }
    }
    acc
}

/// Matrix position `X^mu` and covariant momentum `P_mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixObservables {
    pub x: [CMat; 4],
    pub p_lower: [CMat; 4],
}

impl MatrixObservables {
    pub fn n(&self) -> usize {
        self.x[0].nrows()
    }

    pub fn p_upper(&self, mu: usize) -> CMat {
        &self.p_lower[mu] * C64::new(ETA[mu], 0.0)
    }

    /// `P^mu P_mu`.
    pub fn mass_shell_operator(&self) -> CMat {
        (0..4).fold(CMat::zeros(self.n(), self.n()), |acc, mu| {
            acc + self.p_upper(mu) * &self.p_lower[mu]
        })
    }

    pub fn family(&self) -> Vec<&CMat> {
        self.x.iter().chain(self.p_lower.iter()).collect()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.family().iter().fold(0.0, |a, m| a.max(hermiticity_residual(m)))
    }

    /// Largest pairwise commutator among the eight observables.
    pub fn max_commutator(&self) -> f64 {
        let fam = self.family();
        let mut worst: f64 = 0.0;
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                worst = worst.max(max_abs(&commutator(fam[i], fam[j])));
            }
        }
        worst
    }

    /// `A -> U A U^dagger` for every observable.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        let t = |m: &CMat| u * m * u.adjoint();
        MatrixObservables {
            x: [0, 1, 2, 3].map(|mu| t(&self.x[mu])),
            p_lower: [0, 1, 2, 3].map(|mu| t(&self.p_lower[mu])),
        }
    }

    pub fn max_abs_diff(&self, other: &MatrixObservables) -> f64 {
        (0..4).fold(0.0, |a, mu| {
            a.max(max_abs(&(&self.x[mu] - &other.x[mu])))
                .max(max_abs(&(&self.p_lower[mu] - &other.p_lower[mu])))
        })
    }

    fn scale(&self) -> f64 {
        self.family().iter().fold(1.0, |a, m| a.max(max_abs(m)))
    }
}

/// Gauge connection `Gamma(tau)`.
#[derive(Clone)]
pub enum GaugeConnection {
    Zero,
    Constant(CMat),
    /// `Gamma = -H / k`, which freezes Heisenberg operators.
    Schrodinger { hamiltonian: CMat, k: f64 },
    TimeDependent(Arc<dyn Fn(f64) -> CMat + Send + Sync>),
}

impl fmt::Debug for GaugeConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeConnection::Zero => write!(f, "Zero"),
            GaugeConnection::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            GaugeConnection::Schrodinger { k, .. } => {
                f.debug_struct("Schrodinger").field("k", k).finish_non_exhaustive()
            }
            GaugeConnection::TimeDependent(_) => write!(f, "TimeDependent(..)"),
        }
    }
}

impl GaugeConnection {
    pub fn at(&self, tau: f64, n: usize) -> CMat {
        match self {
            GaugeConnection::Zero => CMat::zeros(n, n),
            GaugeConnection::Constant(m) => m.clone(),
            GaugeConnection::Schrodinger { hamiltonian, k } => hamiltonian * C64::new(-1.0 / k, 0.0),
            GaugeConnection::TimeDependent(f) => f(tau),
        }
    }
}

/// `Gamma' = U Gamma U^dagger - i U' U^dagger`.
pub fn transform_connection(gamma: &CMat, u: &CMat, du: &CMat) -> CMat {
    u * gamma * u.adjoint() - du * u.adjoint() * I
}

/// `D v = dv/dtau - i Gamma v`, with the derivative by central differences.
pub fn covariant_derivative(
    v: &dyn Fn(f64) -> CMat,
    gamma: &GaugeConnection,
    tau: f64,
    step: f64,
) -> CMat {
    let dv = (v(tau + step) - v(tau - step)) / C64::new(2.0 * step, 0.0);
    let vt = v(tau);
    let g = gamma.at(tau, vt.nrows());
    dv - g * vt * I
}

/// One simultaneous eigen-direction of the observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub x: FourVector,
    pub p: FourVector,
}

#[derive(Clone, Debug)]
pub struct GaugeBack {
    /// Columns are the common eigenvectors.
    pub unitary: CMat,
    pub tracks: Vec<Track>,
    /// Largest off-diagonal entry left after conjugation.
    pub residual: f64,
}

fn split_clusters(
    mats: &[CMat],
    basis: CMat,
    rng: &mut ChaCha8Rng,
    tol: f64,
    out: &mut Vec<CMat>,
) {
    let r = basis.ncols();
    if r == 1 {
        out.push(basis);
        return;
    }
    let restricted: Vec<CMat> = mats.iter().map(|m| basis.adjoint() * m * &basis).collect();
    let all_scalar = restricted.iter().all(|b| {
        let s = b.trace() / C64::new(r as f64, 0.0);
        max_abs(&(b - CMat::identity(r, r) * s)) <= tol
    });
    if all_scalar {
        out.push(basis);
        return;
    }
    for _attempt in 0..8 {
        let w = random_gaussian_matrix(rng, restricted.len(), 1);
        let mut combo = CMat::zeros(r, r);
        for (k, b) in restricted.iter().enumerate() {
            combo += b * C64::new(w[(k, 0)].re, 0.0);
        }
        let (vals, vecs) = hermitian_eigen_desc(&combo);
        let mut groups: Vec<Vec<usize>> = vec![vec![0]];
        for k in 1..r {
            if (vals[k - 1] - vals[k]).abs() > tol {
                groups.push(vec![k]);
            } else {
                groups.last_mut().unwrap().push(k);
            }
        }
        if groups.len() == 1 {
            continue;
        }
        for g in groups {
            let sub = CMat::from_fn(r, g.len(), |i, j| vecs[(i, g[j])]);
            split_clusters(mats, &basis * sub, rng, tol, out);
        }
        return;
    }
    out.push(basis);
}

/// Simultaneous diagonalization of a commuting observable family.
pub fn gauge_back(obs: &MatrixObservables, tol: f64) -> Result<GaugeBack> {
    let scale = obs.scale();
    let comm = obs.max_commutator();
    if comm > tol * scale * scale {
        return Err(Error::NotGaugeable {
            residual: comm,
            tolerance: tol,
        });
    }
    let n = obs.n();
    let mats: Vec<CMat> = obs.family().into_iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(GAUGE_BACK_SEED);
    let mut blocks = Vec::new();
    split_clusters(&mats, CMat::identity(n, n), &mut rng, tol * scale, &mut blocks);
    let mut u = CMat::zeros(n, n);
    let mut col = 0;
    for b in &blocks {
        for j in 0..b.ncols() {
            u.set_column(col, &b.column(j));
            col += 1;
        }
    }
    let diag = obs.conjugate_by(&u.adjoint());
    let mut residual: f64 = 0.0;
    for m in diag.family() {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    residual = residual.max(m[(i, j)].norm());
                }
            }
        }
    }
    let tracks = (0..n)
        .map(|r| Track {
            x: FourVector([0, 1, 2, 3].map(|mu| diag.x[mu][(r, r)].re)),
            p: FourVector([0, 1, 2, 3].map(|mu| ETA[mu] * diag.p_lower[mu][(r, r)].re)),
        })
        .collect();
    Ok(GaugeBack {
        unitary: u,
        tracks,
        residual,
    })
}

/// Gauges each step back to diagonal form and follows the eigen-directions
/// from step to step by overlap. Returns `tracks[r][step]`.
pub fn track_series(series: &[MatrixObservables], tol: f64) -> Result<Vec<Vec<Track>>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let g0 = gauge_back(first, tol)?;
    let n = first.n();
    let mut tracks: Vec<Vec<Track>> = g0.tracks.iter().map(|t| vec![*t]).collect();
    let mut prev = g0.unitary;
    for obs in &series[1..] {
        let g = gauge_back(obs, tol)?;
        let overlap = prev.adjoint() * &g.unitary;
        let mut used = vec![false; n];
        let mut next = CMat::zeros(n, n);
        for r in 0..n {
            let (best, _) = (0..n)
                .filter(|s| !used[*s])
                .map(|s| (s, overlap[(r, s)].norm()))
                .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            used[best] = true;
            tracks[r].push(g.tracks[best]);
            next.set_column(r, &g.unitary.column(best));
        }
        prev = next;
    }
    Ok(tracks)
}

/// `J^{mu nu} = X^mu P^nu - X^nu P^mu`.
#[derive(Clone, Debug)]
pub struct AngularTensor {
    j: Vec<CMat>,
}

impl AngularTensor {
    pub fn from_operators(x: &[CMat; 4], p_upper: &[CMat; 4]) -> Self {
        let mut j = Vec::with_capacity(16);
        for mu in 0..4 {
            for nu in 0..4 {
                j.push(&x[mu] * &p_upper[nu] - &x[nu] * &p_upper[mu]);
            }
        }
        AngularTensor { j }
    }

    pub fn get(&self, mu: usize, nu: usize) -> &CMat {
        &self.j[4 * mu + nu]
    }
}

pub fn angular_tensor(obs: &MatrixObservables) -> AngularTensor {
    AngularTensor::from_operators(&obs.x, &[0, 1, 2, 3].map(|mu| obs.p_upper(mu)))
}

/// Largest entry of
/// `[J^{mn}, J^{rs}] - sign i k (eta^{nr} J^{ms} - eta^{mr} J^{ns} - eta^{ns} J^{mr} + eta^{ms} J^{nr})`
/// over all index choices, optionally restricted to rows and columns `block`.
pub fn lorentz_residual_with_sign(j: &AngularTensor, k: f64, sign: f64, block: Option<&[usize]>) -> f64 {
    let dim = j.get(0, 1).nrows();
    let all: Vec<usize> = (0..dim).collect();
    let idx = block.unwrap_or(&all);
    let restrict = |m: &CMat| CMat::from_fn(idx.len(), idx.len(), |r, s| m[(idx[r], idx[s])]);
    let eta = |a: usize, b: usize| if a == b { ETA[a] } else { 0.0 };
    let coef = I * (sign * k);
    let mut worst: f64 = 0.0;
    for m in 0..4 {
        for n in (m + 1)..4 {
            for r in 0..4 {
                for s in (r + 1)..4 {
                    let lhs = commutator_block(j.get(m, n), j.get(r, s), idx);
                    let mut rhs = CMat::zeros(idx.len(), idx.len());
                    for (w, a, b) in [
                        (eta(n, r), m, s),
                        (-eta(m, r), n, s),
                        (-eta(n, s), m, r),
                        (eta(m, s), n, r),
                    ] {
                        if w != 0.0 {
                            rhs += restrict(j.get(a, b)) * C64::new(w, 0.0);
                        }
                    }
                    worst = worst.max(max_abs(&(lhs - rhs * coef)));
                }
            }
        }
    }
    worst
}

/// Lorentz-algebra residual in the convention `[X^mu, P_nu] = i k delta`.
pub fn so13_residual(j: &AngularTensor, k: f64, block: Option<&[usize]>) -> f64 {
    lorentz_residual_with_sign(j, k, -1.0, block)
}

/// Writes `tau, track, x0..x3, p0..p3` rows.
pub fn write_tracks_csv<W: Write>(taus: &[f64], tracks: &[Vec<Track>], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["tau", "track", "x0", "x1", "x2", "x3", "p0", "p1", "p2", "p3"])?;
    for (r, tr) in tracks.iter().enumerate() {
        for (t, track) in taus.iter().zip(tr) {
            let mut row = vec![fmt_float(*t), r.to_string()];
            row.extend(track.x.0.iter().chain(track.p.0.iter()).map(|&v| fmt_float(v)));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Frame unitary and weights, split into real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FrameRecord {
    pub n: usize,
    pub seed: u64,
    pub frame_re: Vec<Vec<f64>>,
    pub frame_im: Vec<Vec<f64>>,
    pub phi_re: Vec<Vec<f64>>,
    pub phi_im: Vec<Vec<f64>>,
}

impl FrameRecord {
    pub fn new(state: &EnsembleState, seed: u64) -> Self {
        let split = |m: &CMat, f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        FrameRecord {
            n: state.n(),
            seed,
            frame_re: split(state.frame(), |z| z.re),
            frame_im: split(state.frame(), |z| z.im),
            phi_re: split(state.phi(), |z| z.re),
            phi_im: split(state.phi(), |z| z.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;

    fn specs() -> Vec<ParticleSpec> {
        vec![
            ParticleSpec { x: FourVector::new(0.0, 1.0, 0.0, 0.0), p: FourVector::new(1.0, 0.0, 0.0, 0.0), mu: 0.5 },
            ParticleSpec { x: FourVector::new(0.3, -1.0, 0.5, 0.0), p: FourVector::new(1.25, 0.75, 0.0, 0.0), mu: 0.2 },
            ParticleSpec { x: FourVector::new(0.0, 0.0, 2.0, 1.0), p: FourVector::new(1.1, 0.0, -0.3, 0.2), mu: -0.4 },
        ]
    }

    #[test]
    fn single_particle_observables_match_phase_point() {
        let s = &specs()[1];
        let ens = EnsembleState::resolve(&[*s], CMat::identity(1, 1)).unwrap();
        let obs = ens.observables();
        for mu in 0..4 {
            assert!((obs.x[mu][(0, 0)].re - s.x.0[mu]).abs() < 1e-13);
            assert!((obs.p_upper(mu)[(0, 0)].re - s.p.0[mu]).abs() < 1e-13);
        }
    }

    #[test]
    fn decoupled_ensemble_is_diagonal() {
        let ens = EnsembleState::resolve(&specs(), CMat::identity(3, 3)).unwrap();
        let obs = ens.observables();
        assert!(obs.max_commutator() < 1e-13);
        assert!(obs.hermiticity_residual() < 1e-14);
    }

    #[test]
    fn observables_transform_covariantly() {
        let ens = EnsembleState::resolve(&specs(), CMat::identity(3, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary(&mut rng, 3);
        let moved = ens.apply_gauge(&u).unwrap();
        let expect = ens.observables().conjugate_by(&u);
        assert!(moved.observables().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn non_unitary_gauge_rejected() {
        let ens = EnsembleState::resolve(&specs(), CMat::identity(3, 3)).unwrap();
        let u = CMat::identity(3, 3) * C64::new(1.1, 0.0);
        assert!(matches!(ens.apply_gauge(&u), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn gauge_back_recovers_tracks() {
        let sp = specs();
        let ens = EnsembleState::resolve(&sp, CMat::identity(3, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let moved = ens.apply_gauge(&random_unitary(&mut rng, 3)).unwrap();
        let g = gauge_back(&moved.observables(), 1e-8).unwrap();
        assert!(g.residual < 1e-10);
        for s in &sp {
            assert!(g
                .tracks
                .iter()
                .any(|t| t.x.max_abs_diff(&s.x) < 1e-10 && t.p.max_abs_diff(&s.p) < 1e-10));
        }
    }

    #[test]
    fn non_commuting_family_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = crate::linalg::random_hermitian(&mut rng, 3);
        let g = crate::linalg::random_hermitian(&mut rng, 3);
        let obs = MatrixObservables {
            x: [h.clone(), g.clone(), h.clone(), h.clone()],
            p_lower: [h.clone(), h.clone(), h.clone(), h],
        };
        assert!(matches!(gauge_back(&obs, 1e-8), Err(Error::NotGaugeable { .. })));
    }

    #[test]
    fn simpson_needs_even_steps() {
        let ens = EnsembleState::resolve(&specs(), CMat::identity(3, 3)).unwrap();
        assert!(ens.action_value(&EinbeinProfile::constant(1.0), 1.0, (0.0, 1.0), 5).is_err());
    }
}
