//! Truncated canonical pairs, Heisenberg and Schrödinger picture evolution,
//! Born-rule measurement and the non-relativistic limit.

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ensemble::{AngularTensor, GaugeConnection};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_float};
use crate::linalg::{
    commutator, expi_hermitian, hermitian_eigen_desc, is_hermitian, max_abs, CMat, CVec, C64, I,
};
use crate::spinor::ETA;

/// `X = sqrt(k/2)(a + a^dagger)` and `P = -i sqrt(k/2)(a - a^dagger)` on the
/// first N oscillator levels.
#[derive(Clone, Debug)]
pub struct CanonicalPair {
    pub n: usize,
    pub k: f64,
    pub x: CMat,
    pub p: CMat,
}

/// Truncated lowering operator.
pub fn lowering(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn build_truncated_pair(n: usize, k: f64) -> Result<CanonicalPair> {
    if n < 2 {
        return Err(Error::Validation(format!("truncation needs N >= 2, got {n}")));
    }
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Validation("commutator constant k must be finite and nonzero".into()));
    }
    let a = lowering(n);
    let ad = a.adjoint();
    let s = (k.abs() / 2.0).sqrt();
    let x = (&a + &ad) * C64::new(s, 0.0);
    let p = (&a - &ad) * (-I * s * k.signum());
    Ok(CanonicalPair { n, k, x, p })
}

impl CanonicalPair {
    pub fn commutator(&self) -> CMat {
        commutator(&self.x, &self.p)
    }

    /// Entries where `[X, P]` differs from `ik 1` by more than `1e-12 |k|`.
    pub fn defect_mask(&self) -> Vec<(usize, usize)> {
        let c = self.commutator();
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { I * self.k } else { C64::new(0.0, 0.0) };
                if (c[(i, j)] - target).norm() > 1e-12 * self.k.abs() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Same pair with `P` shifted by a multiple of the identity.
    pub fn with_momentum_offset(&self, offset: f64) -> CanonicalPair {
        let mut out = self.clone();
        out.p += CMat::identity(self.n, self.n) * C64::new(offset, 0.0);
        out
    }
}

/// Indices below the top quarter of an N-level basis.
pub fn interior_indices(n: usize) -> Vec<usize> {
    (0..n - n / 4).collect()
}

/// Restriction of a square matrix to the leading `len` rows and columns.
pub fn leading_block(m: &CMat, len: usize) -> CMat {
    m.view((0, 0), (len, len)).into_owned()
}

/// `(P^2 - m^2) / 2m` for a single time-like pair.
pub fn free_hamiltonian(pair: &CanonicalPair, m: f64) -> CMat {
    let n = pair.n;
    (&pair.p * &pair.p - CMat::identity(n, n) * C64::new(m * m, 0.0)) * C64::new(0.5 / m, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Spectral decomposition of the Hermitian generator.
    Spectral,
    /// Padé scaling-and-squaring exponential.
    Pade,
}

fn propagator(h: &CMat, scale: f64, method: Propagator) -> CMat {
    match method {
        Propagator::Spectral => expi_hermitian(h, scale),
        Propagator::Pade => (h * (I * scale)).exp(),
    }
}

#[derive(Clone, Debug)]
pub struct HeisenbergSeries {
    pub taus: Vec<f64>,
    pub x: Vec<CMat>,
    pub p: Vec<CMat>,
}

/// Solves `dX/dtau = (i/k)[H, X]` via `X(tau) = U^dagger X U`,
/// `U = exp(-i H tau / k)`, with the free Hamiltonian of `pair`.
pub fn heisenberg_evolve(
    pair: &CanonicalPair,
    m: f64,
    span: (f64, f64),
    steps: usize,
    method: Propagator,
) -> Result<HeisenbergSeries> {
    if !(m > 0.0) {
        return Err(Error::Validation("mass must be positive".into()));
    }
    if steps == 0 {
        return Err(Error::Validation("at least one step is required".into()));
    }
    let h = free_hamiltonian(pair, m);
    let mut out = HeisenbergSeries {
        taus: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
    };
    let dt = (span.1 - span.0) / steps as f64;
    for i in 0..=steps {
        let tau = span.0 + i as f64 * dt;
        let u = propagator(&h, -tau / pair.k, method);
        let ud = u.adjoint();
        out.taus.push(tau);
        out.x.push(&ud * &pair.x * &u);
        out.p.push(&ud * &pair.p * &u);
    }
    Ok(out)
}

/// `X(0) + tau P / m`.
pub fn heisenberg_closed_form(pair: &CanonicalPair, m: f64, tau: f64) -> CMat {
    &pair.x + &pair.p * C64::new(tau / m, 0.0)
}

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: CVec,
}

impl StateVector {
    pub fn new(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Validation("state vector must have finite, nonzero norm".into()));
        }
        Ok(StateVector {
            amps: amps / C64::new(norm, 0.0),
        })
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = CVec::zeros(n);
        v[i] = C64::new(1.0, 0.0);
        StateVector { amps: v }
    }

    /// Truncated, renormalized coherent state `|alpha>`.
    pub fn coherent(n: usize, alpha: C64) -> Self {
        let mut v = CVec::zeros(n);
        let mut term = C64::new(1.0, 0.0);
        for j in 0..n {
            if j > 0 {
                term *= alpha / (j as f64).sqrt();
            }
            v[j] = term;
        }
        Self::new(v).expect("coherent state has nonzero norm")
    }

    /// Coherent state with `<X> = x0` and `<P> = p0` for the pair constant `k > 0`.
    pub fn wavepacket(n: usize, k: f64, x0: f64, p0: f64) -> Self {
        let s = (2.0 * k.abs()).sqrt();
        Self::coherent(n, C64::new(x0 / s, p0 / s))
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn apply(&self, u: &CMat) -> Self {
        StateVector { amps: u * &self.amps }
    }

    /// Largest amplitude on the top quarter of the basis.
    pub fn top_quarter_weight(&self) -> f64 {
        let n = self.dim();
        (n - n / 4..n).fold(0.0, |a, i| a.max(self.amps[i].norm()))
    }

    pub fn is_interior_supported(&self) -> bool {
        self.top_quarter_weight() < 1e-8
    }
}

/// `<s|A|s>` for Hermitian A.
pub fn expectation(s: &StateVector, a: &CMat) -> Result<f64> {
    if a.nrows() != s.dim() || !a.is_square() {
        return Err(Error::Dimension {
            expected: s.dim(),
            got: a.nrows(),
        });
    }
    if !is_hermitian(a, 1e-12) {
        return Err(Error::Validation("observable is not Hermitian".into()));
    }
    Ok(s.amps.dotc(&(a * &s.amps)).re)
}

/// Gauge choice for state and operator evolution.
#[derive(Clone, Debug)]
pub enum PictureGauge {
    Heisenberg,
    /// `Gamma = -H / k`.
    Schrodinger { hamiltonian: CMat, k: f64 },
    Custom(GaugeConnection),
}

impl PictureGauge {
    pub fn connection(&self) -> GaugeConnection {
        match self {
            PictureGauge::Heisenberg => GaugeConnection::Zero,
            PictureGauge::Schrodinger { hamiltonian, k } => GaugeConnection::Schrodinger {
                hamiltonian: hamiltonian.clone(),
                k: *k,
            },
            PictureGauge::Custom(g) => g.clone(),
        }
    }
}

/// Solves `(d/dtau - i Gamma) s = 0` with one exponential per step, taken at
/// the step midpoint. Returns the state after every step.
pub fn evolve_state_series(
    s: &StateVector,
    gauge: &GaugeConnection,
    span: (f64, f64),
    steps: usize,
) -> Result<Vec<StateVector>> {
    if steps == 0 {
        return Err(Error::Validation("at least one step is required".into()));
    }
    let n = s.dim();
    let h = (span.1 - span.0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.clone());
    let fixed = match gauge {
        GaugeConnection::Zero => Some(None),
        GaugeConnection::Constant(_) | GaugeConnection::Schrodinger { .. } => {
            let g = gauge.at(span.0, n);
            if !is_hermitian(&g, 1e-12) {
                return Err(Error::Validation("gauge connection must be Hermitian".into()));
            }
            Some(Some(expi_hermitian(&g, h)))
        }
        GaugeConnection::TimeDependent(_) => None,
    };
    let mut cur = s.clone();
    for i in 0..steps {
        cur = match &fixed {
            Some(None) => cur,
            Some(Some(u)) => cur.apply(u),
            None => {
                let g = gauge.at(span.0 + (i as f64 + 0.5) * h, n);
                cur.apply(&expi_hermitian(&g, h))
            }
        };
        out.push(cur.clone());
    }
    Ok(out)
}

pub fn evolve_state(
    s: &StateVector,
    gauge: &GaugeConnection,
    span: (f64, f64),
    steps: usize,
) -> Result<StateVector> {
    Ok(evolve_state_series(s, gauge, span, steps)?.pop().expect("non-empty series"))
}

/// Operator evolution `dA/dtau = i [H/k + Gamma, A]` for a constant
/// connection, which is exact.
pub fn evolve_operator(a: &CMat, hamiltonian: &CMat, k: f64, gauge: &PictureGauge, tau: f64) -> CMat {
    let n = a.nrows();
    let g = hamiltonian * C64::new(1.0 / k, 0.0) + gauge.connection().at(0.0, n);
    let u = expi_hermitian(&g, tau);
    &u * a * u.adjoint()
}

/// Central-difference check of Ehrenfest's theorem for the free pair.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EhrenfestCheck {
    pub fd_derivative: f64,
    pub commutator_expectation: f64,
    pub momentum_over_mass: f64,
    pub residual: f64,
}

pub fn ehrenfest_check(
    pair: &CanonicalPair,
    s: &StateVector,
    m: f64,
    tau_bar: f64,
    span: f64,
) -> Result<EhrenfestCheck> {
    let h = free_hamiltonian(pair, m);
    let step = 1e-4 * span;
    let at = |t: f64| s.apply(&expi_hermitian(&h, -t / pair.k));
    let plus = expectation(&at(tau_bar + step), &pair.x)?;
    let minus = expectation(&at(tau_bar - step), &pair.x)?;
    let fd = (plus - minus) / (2.0 * step);
    let st = at(tau_bar);
    let gen = commutator(&h, &pair.x) * C64::new(0.0, 1.0 / pair.k);
    let comm = st.amps.dotc(&(&gen * &st.amps)).re;
    Ok(EhrenfestCheck {
        fd_derivative: fd,
        commutator_expectation: comm,
        momentum_over_mass: expectation(&st, &pair.p)? / m,
        residual: (fd - comm).abs(),
    })
}

/// `|d<X>/dtau - <(i/k)[H, X]>|` with step `1e-4 span`.
pub fn ehrenfest_residual(pair: &CanonicalPair, s: &StateVector, m: f64, tau_bar: f64, span: f64) -> Result<f64> {
    Ok(ehrenfest_check(pair, s, m, tau_bar, span)?.residual)
}

/// One eigenvalue of an observable with its Born weight.
#[derive(Clone, Debug)]
pub struct BornOutcome {
    pub value: f64,
    pub probability: f64,
    /// Orthonormal basis of the eigenspace, as columns.
    pub eigenspace: CMat,
}

/// Eigenvalues of A (degenerate ones grouped) with `|<x_r|s>|^2` weights.
pub fn born_distribution(s: &StateVector, a: &CMat) -> Result<Vec<BornOutcome>> {
    if a.nrows() != s.dim() {
        return Err(Error::Dimension {
            expected: s.dim(),
            got: a.nrows(),
        });
    }
    if !is_hermitian(a, 1e-12) {
        return Err(Error::Validation("observable is not Hermitian".into()));
    }
    let (vals, vecs) = hermitian_eigen_desc(a);
    let n = vals.len();
    let tol = 1e-10 * vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in (0..n).rev() {
        match groups.last_mut() {
            Some(g) if (vals[g[0]] - vals[k]).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let space = CMat::from_fn(n, g.len(), |i, j| vecs[(i, g[j])]);
            let proj = space.adjoint() * &s.amps;
            BornOutcome {
                value: g.iter().map(|&k| vals[k]).sum::<f64>() / g.len() as f64,
                probability: proj.norm_squared(),
                eigenspace: space,
            }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub value: f64,
    pub probability: f64,
    pub state: StateVector,
}

fn pick(outcomes: &[BornOutcome], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, o) in outcomes.iter().enumerate() {
        acc += o.probability;
        if u < acc {
            return i;
        }
    }
    outcomes
        .iter()
        .rposition(|o| o.probability > 0.0)
        .unwrap_or(outcomes.len() - 1)
}

pub fn measure_with<R: Rng + ?Sized>(s: &StateVector, a: &CMat, rng: &mut R) -> Result<Measurement> {
    let outcomes = born_distribution(s, a)?;
    let r = pick(&outcomes, rng.random::<f64>());
    let o = &outcomes[r];
    let collapsed = &o.eigenspace * (o.eigenspace.adjoint() * &s.amps);
    Ok(Measurement {
        value: o.value,
        probability: o.probability,
        state: StateVector::new(collapsed)?,
    })
}

/// Projective measurement of A on s with a seeded generator.
pub fn measure(s: &StateVector, a: &CMat, seed: u64) -> Result<Measurement> {
    measure_with(s, a, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BornHistogram {
    pub seed: u64,
    pub shots: usize,
    pub workers: usize,
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Draws `shots` outcomes split across `workers` generators. Worker `w` uses
/// ChaCha8 seeded with `seed` on stream `w`; counts are merged in worker order.
pub fn sample_born(s: &StateVector, a: &CMat, shots: usize, seed: u64, workers: usize) -> Result<BornHistogram> {
    let workers = workers.max(1);
    let outcomes = born_distribution(s, a)?;
    let per: Vec<usize> = (0..workers)
        .map(|w| shots / workers + usize::from(w < shots % workers))
        .collect();
    let partial: Vec<Vec<u64>> = per
        .par_iter()
        .enumerate()
        .map(|(w, &count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let mut c = vec![0u64; outcomes.len()];
            for _ in 0..count {
                c[pick(&outcomes, rng.random::<f64>())] += 1;
            }
            c
        })
        .collect();
    let mut counts = vec![0u64; outcomes.len()];
    for p in &partial {
        for (t, v) in counts.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(BornHistogram {
        seed,
        shots,
        workers,
        values: outcomes.iter().map(|o| o.value).collect(),
        probabilities: outcomes.iter().map(|o| o.probability).collect(),
        counts,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of a histogram against its Born weights. Bins with an
/// expected count below five are pooled.
pub fn chi_square(hist: &BornHistogram) -> ChiSquareTest {
    let total = hist.shots as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (p, &c) in hist.probabilities.iter().zip(&hist.counts) {
        let e = p * total;
        if e >= 5.0 {
            bins.push((e, c as f64));
        } else {
            pooled.0 += e;
            pooled.1 += c as f64;
        }
    }
    if pooled.0 > 0.0 {
        bins.push(pooled);
    }
    let statistic: f64 = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// Four canonical pairs, one per spacetime direction, acting on separate
/// tensor factors. The time factor carries a momentum offset.
#[derive(Clone, Debug)]
pub struct SpacetimePairs {
    pub pairs: [CanonicalPair; 4],
    pub k: f64,
    pub p0_offset: f64,
}

impl SpacetimePairs {
    pub fn new(n: usize, k: f64, p0_offset: f64) -> Result<Self> {
        let base = build_truncated_pair(n, k)?;
        Ok(SpacetimePairs {
            pairs: [
                base.with_momentum_offset(p0_offset),
                base.clone(),
                base.clone(),
                base,
            ],
            k,
            p0_offset,
        })
    }

    pub fn n(&self) -> usize {
        self.pairs[0].n
    }

    /// Single-factor piece `eta^{mu mu} P_mu^2 / 2m` of the free Hamiltonian.
    pub fn factor_hamiltonian(&self, mu: usize, m: f64) -> CMat {
        let p = &self.pairs[mu].p;
        p * p * C64::new(ETA[mu] * 0.5 / m, 0.0)
    }

    /// Operators `X^mu` and `P^mu` embedded in the product of the factors
    /// listed in `slots` (a subset of 0..4 in increasing order).
    pub fn embedded(&self, slots: &[usize]) -> ([CMat; 4], [CMat; 4]) {
        let n = self.n();
        let id = CMat::identity(n, n);
        let embed = |op: &CMat, which: usize| -> CMat {
            slots.iter().fold(CMat::identity(1, 1), |acc, &s| {
                acc.kronecker(if s == which { op } else { &id })
            })
        };
        let dim = n.pow(slots.len() as u32);
        let zero = CMat::zeros(dim, dim);
        let x = [0, 1, 2, 3].map(|mu| {
            if slots.contains(&mu) {
                embed(&self.pairs[mu].x, mu)
            } else {
                zero.clone()
            }
        });
        let p = [0, 1, 2, 3].map(|mu| {
            if slots.contains(&mu) {
                embed(&self.pairs[mu].p, mu) * C64::new(ETA[mu], 0.0)
            } else {
                zero.clone()
            }
        });
        (x, p)
    }
}

/// Product of levels that all sit at or below `max_level` in every factor.
pub fn product_interior(n: usize, factors: usize, max_level: usize) -> Vec<usize> {
    (0..n.pow(factors as u32))
        .filter(|&idx| {
            let mut r = idx;
            (0..factors).all(|_| {
                let lvl = r % n;
                r /= n;
                lvl <= max_level
            })
        })
        .collect()
}

/// Lorentz-algebra residual of `J^{mu nu}` built from four pairs of size n
/// on the full tensor product, restricted to levels `<= n - 3`.
pub fn spacetime_lorentz_residual(n: usize, k: f64, sign: f64) -> Result<f64> {
    let st = SpacetimePairs::new(n, k, 0.0)?;
    let (x, p) = st.embedded(&[0, 1, 2, 3]);
    let j = AngularTensor::from_operators(&x, &p);
    let block = product_interior(n, 4, n.saturating_sub(3));
    Ok(crate::ensemble::lorentz_residual_with_sign(&j, k, sign, Some(&block)))
}

/// Largest interior drift of `J^{mu nu}(tau) - J^{mu nu}(0)` under the free
/// Hamiltonian, evaluated pairwise on two-factor products of size n.
pub fn angular_momentum_drift(n: usize, k: f64, m: f64, tau_bar: f64, interior_level: usize) -> Result<f64> {
    let st = SpacetimePairs::new(n, k, 0.0)?;
    let block = product_interior(n, 2, interior_level);
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        for nu in (mu + 1)..4 {
            let slots = [mu, nu];
            let (x, p) = st.embedded(&slots);
            let id = CMat::identity(n, n);
            let h = st
                .factor_hamiltonian(mu, m)
                .kronecker(&id)
                + id.kronecker(&st.factor_hamiltonian(nu, m));
            let u = expi_hermitian(&h, -tau_bar / k);
            let ud = u.adjoint();
            let j0 = &x[mu] * &p[nu] - &x[nu] * &p[mu];
            let jt = &ud * &j0 * &u;
            for &r in &block {
                for &c in &block {
                    worst = worst.max((jt[(r, c)] - j0[(r, c)]).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Product state over the four spacetime factors.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub factors: [StateVector; 4],
}

impl ProductState {
    pub fn is_interior_supported(&self) -> bool {
        self.factors.iter().all(StateVector::is_interior_supported)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonRelReport {
    pub p0_expectation: f64,
    pub dt_dtau_bar: f64,
    pub dt_residual: f64,
    pub spatial_deviation: f64,
    pub interior_supported: bool,
}

/// Compares `t = <X^0>` and the spatial expectation trajectories under the
/// full free Hamiltonian (Heisenberg picture) with Schrödinger evolution
/// under `H~ = sum_i P_i^2 / 2m`. The spatial factors of the relativistic
/// problem obey `[X^i, P^i] = -ik`, so the non-relativistic evolution runs
/// with commutator constant `-k`.
pub fn nonrel_limit_check(
    st: &SpacetimePairs,
    state: &ProductState,
    m: f64,
    tau_bar_max: f64,
    steps: usize,
) -> Result<NonRelReport> {
    if steps == 0 || !(m > 0.0) {
        return Err(Error::Validation("need steps >= 1 and m > 0".into()));
    }
    let k = st.k;
    let p0 = expectation(&state.factors[0], &st.pairs[0].p)?;
    let span = tau_bar_max.abs().max(1e-300);
    let dtau = 1e-4 * span;
    let h0 = st.factor_hamiltonian(0, m);
    let t_at = |tau: f64| -> Result<f64> {
        let u = expi_hermitian(&h0, -tau / k);
        expectation(&state.factors[0], &(u.adjoint() * &st.pairs[0].x * &u))
    };
    let dt = (t_at(dtau)? - t_at(-dtau)?) / (2.0 * dtau);

    let k_nr = -k;
    let mut deviation: f64 = 0.0;
    for i in 1..4 {
        let h_rel = st.factor_hamiltonian(i, m);
        let p = &st.pairs[i].p;
        let h_nr = p * p * C64::new(0.5 / m, 0.0);
        for s in 0..=steps {
            let tau = tau_bar_max * s as f64 / steps as f64;
            let u = expi_hermitian(&h_rel, -tau / k);
            let ud = u.adjoint();
            let heis_x = expectation(&state.factors[i], &(&ud * &st.pairs[i].x * &u))?;
            let heis_p = expectation(&state.factors[i], &(&ud * p * &u))?;
            let schr = state.factors[i].apply(&expi_hermitian(&h_nr, -tau / k_nr));
            let nr_x = expectation(&schr, &st.pairs[i].x)?;
            let nr_p = expectation(&schr, p)?;
            deviation = deviation.max((heis_x - nr_x).abs()).max((heis_p - nr_p).abs());
        }
    }
    Ok(NonRelReport {
        p0_expectation: p0,
        dt_dtau_bar: dt,
        dt_residual: (dt - p0 / m).abs(),
        spatial_deviation: deviation,
        interior_supported: state.is_interior_supported(),
    })
}

/// One row of the expectation trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub tau_bar: f64,
    pub x: [f64; 4],
    pub p_lower: [f64; 4],
    pub ehrenfest_residual: f64,
}

/// Expectation values of `X^mu` and `P_mu` along Schrödinger evolution of a
/// product state, with the per-step Ehrenfest residual (largest over mu).
pub fn expectation_trace(
    st: &SpacetimePairs,
    state: &ProductState,
    m: f64,
    tau_bar_max: f64,
    steps: usize,
) -> Result<Vec<TraceRow>> {
    let k = st.k;
    let span = tau_bar_max.abs().max(1e-300);
    let mut rows = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let tau = tau_bar_max * s as f64 / steps.max(1) as f64;
        let mut row = TraceRow {
            tau_bar: tau,
            x: [0.0; 4],
            p_lower: [0.0; 4],
            ehrenfest_residual: 0.0,
        };
        for mu in 0..4 {
            let pair = &st.pairs[mu];
            let h = st.factor_hamiltonian(mu, m);
            let at = |t: f64| state.factors[mu].apply(&expi_hermitian(&h, -t / k));
            let cur = at(tau);
            row.x[mu] = expectation(&cur, &pair.x)?;
            row.p_lower[mu] = expectation(&cur, &pair.p)?;
            let step = 1e-4 * span;
            let fd = (expectation(&at(tau + step), &pair.x)? - expectation(&at(tau - step), &pair.x)?)
                / (2.0 * step);
            let gen = commutator(&h, &pair.x) * C64::new(0.0, 1.0 / k);
            let comm = cur.amplitudes().dotc(&(&gen * cur.amplitudes())).re;
            row.ehrenfest_residual = row.ehrenfest_residual.max((fd - comm).abs());
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "tau_bar", "x0", "x1", "x2", "x3", "p_0", "p_1", "p_2", "p_3", "ehrenfest_residual",
    ])?;
    for r in rows {
        let mut rec = vec![fmt_float(r.tau_bar)];
        rec.extend(r.x.iter().chain(r.p_lower.iter()).map(|&v| fmt_float(v)));
        rec.push(fmt_float(r.ehrenfest_residual));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Maximum entry of `A - B` on the leading `len` x `len` block.
pub fn block_deviation(a: &CMat, b: &CMat, len: usize) -> f64 {
    max_abs(&(leading_block(a, len) - leading_block(b, len)))
}

/// Random state supported on the leading `support` levels.
pub fn random_interior_state<R: Rng + ?Sized>(rng: &mut R, n: usize, support: usize) -> StateVector {
    let mut v = DVector::<C64>::zeros(n);
    for i in 0..support.min(n) {
        v[i] = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    StateVector::new(v).expect("random state is nonzero")
}
