//! Point-particle dynamics in Clifford-spinor form: the Lagrangians, their
//! conjugate momenta, exact and integrated evolution, Noether charges and the
//! proper-time reparametrization.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::AlgebraContext;
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_float};
use crate::linalg::C64;
use crate::spinor::{
    apply_matrix, gram_conj, lower_indices, resolve_phase_point, FourVector, PhasePoint, Spinor2,
    SpinorField,
};

/// Einbein `e(tau)` with closed-form integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EinbeinProfile {
    Constant { value: f64 },
    /// `intercept + slope * tau`.
    Linear { intercept: f64, slope: f64 },
    /// Piecewise-linear through the nodes, constant outside them.
    Tabulated { taus: Vec<f64>, values: Vec<f64> },
    /// `1 / (2 m sqrt(mu0^2 + m tau))`, the einbein that makes tau the
    /// proper-time-like parameter of an on-shell particle with `mu(0) = mu0`.
    ProperTime { mass: f64, mu0: f64 },
}

impl EinbeinProfile {
    pub fn constant(value: f64) -> Self {
        EinbeinProfile::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EinbeinProfile::Tabulated { taus, values } => {
                if taus.len() != values.len() || taus.is_empty() {
                    return Err(Error::Validation(
                        "tabulated einbein needs matching, non-empty node lists".into(),
                    ));
                }
                if taus.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation(
                        "tabulated einbein nodes must increase strictly".into(),
                    ));
                }
                Ok(())
            }
            EinbeinProfile::ProperTime { mass, .. } if *mass <= 0.0 => {
                Err(Error::Validation("proper-time einbein needs mass > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        match self {
            EinbeinProfile::Constant { value } => *value,
            EinbeinProfile::Linear { intercept, slope } => intercept + slope * tau,
            EinbeinProfile::Tabulated { taus, values } => {
                let n = taus.len();
                if tau <= taus[0] {
                    return values[0];
                }
                if tau >= taus[n - 1] {
                    return values[n - 1];
                }
                let k = taus.partition_point(|&t| t <= tau) - 1;
                let w = (tau - taus[k]) / (taus[k + 1] - taus[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
            EinbeinProfile::ProperTime { mass, mu0 } => {
                1.0 / (2.0 * mass * (mu0 * mu0 + mass * tau).sqrt())
            }
        }
    }

    /// `int_a^b e(tau) dtau`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            EinbeinProfile::Constant { value } => value * (b - a),
            EinbeinProfile::Linear { intercept, slope } => {
                intercept * (b - a) + 0.5 * slope * (b * b - a * a)
            }
            EinbeinProfile::Tabulated { .. } => self.tabulated_primitive(b) - self.tabulated_primitive(a),
            EinbeinProfile::ProperTime { mass, mu0 } => {
                let m = *mass;
                ((mu0 * mu0 + m * b).sqrt() - (mu0 * mu0 + m * a).sqrt()) / (m * m)
            }
        }
    }

    fn tabulated_primitive(&self, t: f64) -> f64 {
        let EinbeinProfile::Tabulated { taus, values } = self else {
            unreachable!()
        };
        let n = taus.len();
        if t <= taus[0] {
            return values[0] * (t - taus[0]);
        }
        let mut acc = 0.0;
        for k in 0..n - 1 {
            let (t0, t1) = (taus[k], taus[k + 1]);
            if t >= t1 {
                acc += 0.5 * (values[k] + values[k + 1]) * (t1 - t0);
            } else {
                let v = self.value(t);
                return acc + 0.5 * (values[k] + v) * (t - t0);
            }
        }
        acc + values[n - 1] * (t - taus[n - 1])
    }

    /// Smallest value on `[a, b]`.
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        match self {
            EinbeinProfile::Constant { value } => *value,
            EinbeinProfile::Linear { .. } => self.value(a).min(self.value(b)),
            EinbeinProfile::Tabulated { taus, .. } => taus
                .iter()
                .filter(|&&t| t > a && t < b)
                .map(|&t| self.value(t))
                .fold(self.value(a).min(self.value(b)), f64::min),
            EinbeinProfile::ProperTime { mass, mu0 } => {
                if mu0 * mu0 + mass * a <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.value(a).min(self.value(b))
                }
            }
        }
    }
}

/// Conserved charges `J_AB` and `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoetherCharges {
    pub j_ab: Spinor2,
    pub j: f64,
}

impl NoetherCharges {
    pub fn j_ab_norm(&self) -> f64 {
        self.j_ab.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.j_ab_norm().max(self.j.abs())
    }
}

/// `J_AB = d*_A . c_B + d*_B . c_A` and `j = i (d*_A . c^A - c.c.)`.
pub fn noether_charges(pp: &PhasePoint) -> NoetherCharges {
    let c_low = pp.c.lowered();
    let d = &pp.d_star.comps;
    let j_ab = Spinor2::from_fn(|a, b| d[a].dot(&c_low.comps[b]) + d[b].dot(&c_low.comps[a]));
    let zsum = d[0].dot(&pp.c.comps[0]) + d[1].dot(&pp.c.comps[1]);
    NoetherCharges {
        j_ab,
        j: -2.0 * zsum.im,
    }
}

/// `V^{AB} = dc^A . dc*^B`.
pub fn velocity_gram(dc: &SpinorField) -> Spinor2 {
    gram_conj(dc, dc)
}

/// `Q = (1/2) V^{AB} V_{AB} = det V`.
pub fn velocity_invariant(dc: &SpinorField) -> f64 {
    let v = velocity_gram(dc);
    let low = lower_indices(&v);
    (v.component_mul(&low).sum() * 0.5).re
}

fn positive_invariant(dc: &SpinorField) -> Result<f64> {
    let q = velocity_invariant(dc);
    if !(q > 0.0) {
        return Err(Error::Domain(format!(
            "velocity invariant must be positive, got {q:.3e}"
        )));
    }
    Ok(q)
}

fn momenta_with_coefficient(dc: &SpinorField, coef: f64) -> SpinorField {
    let low = lower_indices(&velocity_gram(dc));
    let dcc = dc.conj();
    apply_matrix(&(low * C64::new(coef, 0.0)), &dcc)
}

/// `L = 4 sqrt(m) Q^{1/4}`.
pub fn quartic_lagrangian(dc: &SpinorField, m: f64) -> Result<f64> {
    let q = positive_invariant(dc)?;
    Ok(4.0 * m.sqrt() * q.powf(0.25))
}

/// Momenta `d*_A` conjugate to `c^A` under the quartic Lagrangian.
pub fn quartic_momenta(dc: &SpinorField, m: f64) -> Result<SpinorField> {
    let q = positive_invariant(dc)?;
    Ok(momenta_with_coefficient(dc, m.sqrt() * q.powf(-0.75)))
}

/// `L = 3 e^{-1/3} Q^{1/3} + m^2 e`.
pub fn polyakov_lagrangian(dc: &SpinorField, e: f64, m: f64) -> Result<f64> {
    let q = positive_invariant(dc)?;
    Ok(3.0 * e.powf(-1.0 / 3.0) * q.cbrt() + m * m * e)
}

/// Momenta conjugate to `c^A` under the einbein Lagrangian.
pub fn polyakov_momenta(dc: &SpinorField, e: f64) -> Result<SpinorField> {
    let q = positive_invariant(dc)?;
    Ok(momenta_with_coefficient(dc, e.powf(-1.0 / 3.0) * q.powf(-2.0 / 3.0)))
}

/// The einbein that extremizes the einbein Lagrangian, `Q^{1/4} / m^{3/2}`.
pub fn on_shell_einbein(dc: &SpinorField, m: f64) -> Result<f64> {
    let q = positive_invariant(dc)?;
    Ok(q.powf(0.25) / m.powf(1.5))
}

/// `d*_A . dc^A + c.c. - L`.
pub fn legendre_hamiltonian(d_star: &SpinorField, dc: &SpinorField, lagrangian: f64) -> f64 {
    let pair = d_star.comps[0].dot(&dc.comps[0]) + d_star.comps[1].dot(&dc.comps[1]);
    2.0 * pair.re - lagrangian
}

/// `dc^A / dtau = e p^{AE} d_E` for a given state.
pub fn hamiltonian_velocity(pp: &PhasePoint, e: f64) -> SpinorField {
    let d = pp.d_star.conj();
    apply_matrix(&(pp.p_spinor_upper() * C64::new(e, 0.0)), &d)
}

/// The `c = a tau` family: `c(0) = 0` with `d*` resolving `p`.
pub fn linear_family_start(p: &FourVector, ctx: &Arc<AlgebraContext>) -> Result<PhasePoint> {
    let pp = resolve_phase_point(&FourVector::default(), p, 0.0, ctx)?;
    Ok(PhasePoint {
        c: SpinorField::zero(ctx),
        d_star: pp.d_star,
    })
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub tau: f64,
    pub tau_bar: Option<f64>,
    pub state: PhasePoint,
    pub x: FourVector,
    pub p: FourVector,
    pub mu: f64,
    pub mass_shell_residual: f64,
    pub noether: NoetherCharges,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub mass: f64,
    pub einbein: EinbeinProfile,
    pub tau_start: f64,
    pub start: PhasePoint,
    pub p: FourVector,
    pub p2: f64,
    pub mu0: f64,
    pub on_shell: bool,
    pub samples: Vec<Sample>,
    velocity: SpinorField,
}

fn sample(tau: f64, state: PhasePoint, m: f64) -> Sample {
    let p = state.p();
    Sample {
        tau,
        tau_bar: None,
        x: state.x(),
        mu: state.mu(),
        mass_shell_residual: (p.norm2() - m * m).abs(),
        noether: noether_charges(&state),
        p,
        state,
    }
}

fn validate_run(start: &PhasePoint, e: &EinbeinProfile, m: f64, span: (f64, f64), steps: usize) -> Result<()> {
    if !(m > 0.0) {
        return Err(Error::Validation("mass must be positive".into()));
    }
    if steps == 0 {
        return Err(Error::Validation("at least one step is required".into()));
    }
    if !(span.1 > span.0) {
        return Err(Error::Validation("tau span must be increasing".into()));
    }
    e.validate()?;
    let emin = e.min_on(span.0, span.1);
    if !(emin > 0.0) {
        return Err(Error::Domain(format!(
            "einbein must be positive on [{}, {}], minimum {emin:.3e}",
            span.0, span.1
        )));
    }
    let scale = 1.0 + start.mu().abs();
    let r = start.noether_condition_residual();
    if r > 1e-9 * scale {
        return Err(Error::Validation(format!(
            "initial state violates d*_A . c^B = mu delta (residual {r:.3e})"
        )));
    }
    Ok(())
}

/// Exact evolution `c(tau) = c(tau_0) + E(tau) p^{AE} d_E` with `E` the
/// einbein integral; `d*` is constant.
pub fn evolve(
    start: &PhasePoint,
    e: &EinbeinProfile,
    m: f64,
    span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    validate_run(start, e, m, span, steps)?;
    let velocity = hamiltonian_velocity(start, 1.0);
    let p = start.p();
    let mut traj = Trajectory {
        mass: m,
        einbein: e.clone(),
        tau_start: span.0,
        start: start.clone(),
        p,
        p2: p.norm2(),
        mu0: start.mu(),
        on_shell: (p.norm2() - m * m).abs() <= 1e-9 * m.max(1.0).powi(2),
        samples: Vec::with_capacity(steps + 1),
        velocity,
    };
    let h = (span.1 - span.0) / steps as f64;
    for i in 0..=steps {
        let tau = if i == steps { span.1 } else { span.0 + i as f64 * h };
        let state = traj.state_at(tau);
        traj.samples.push(sample(tau, state, m));
    }
    Ok(traj)
}

/// Classical RK4 on the Hamiltonian vector field `dc/dtau = e p^{AE} d_E`,
/// `dd*/dtau = 0`, with `p` recomputed from the current state at each stage.
pub fn evolve_rk4(
    start: &PhasePoint,
    e: &EinbeinProfile,
    m: f64,
    span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    validate_run(start, e, m, span, steps)?;
    let field = |tau: f64, s: &PhasePoint| -> (SpinorField, SpinorField) {
        (
            hamiltonian_velocity(s, e.value(tau)),
            SpinorField::zero(s.context()),
        )
    };
    let advance = |s: &PhasePoint, k: &(SpinorField, SpinorField), w: f64| -> PhasePoint {
        let mut out = s.clone();
        out.c.axpy(C64::new(w, 0.0), &k.0);
        out.d_star.axpy(C64::new(w, 0.0), &k.1);
        out
    };
    let h = (span.1 - span.0) / steps as f64;
    let mut s = start.clone();
    let p = start.p();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(span.0, s.clone(), m));
    for i in 0..steps {
        let t = span.0 + i as f64 * h;
        let k1 = field(t, &s);
        let k2 = field(t + 0.5 * h, &advance(&s, &k1, 0.5 * h));
        let k3 = field(t + 0.5 * h, &advance(&s, &k2, 0.5 * h));
        let k4 = field(t + h, &advance(&s, &k3, h));
        for (k, w) in [(&k1, h / 6.0), (&k2, h / 3.0), (&k3, h / 3.0), (&k4, h / 6.0)] {
            s.c.axpy(C64::new(w, 0.0), &k.0);
            s.d_star.axpy(C64::new(w, 0.0), &k.1);
        }
        let tau = if i + 1 == steps { span.1 } else { t + h };
        samples.push(sample(tau, s.clone(), m));
    }
    Ok(Trajectory {
        mass: m,
        einbein: e.clone(),
        tau_start: span.0,
        start: start.clone(),
        p,
        p2: p.norm2(),
        mu0: start.mu(),
        on_shell: (p.norm2() - m * m).abs() <= 1e-9 * m.max(1.0).powi(2),
        samples,
        velocity: hamiltonian_velocity(start, 1.0),
    })
}

impl Trajectory {
    /// Exact state at any tau, inside or outside the sampled window.
    pub fn state_at(&self, tau: f64) -> PhasePoint {
        let big_e = self.einbein.integral(self.tau_start, tau);
        let mut c = self.start.c.clone();
        c.axpy(C64::new(big_e, 0.0), &self.velocity);
        PhasePoint {
            c,
            d_star: self.start.d_star.clone(),
        }
    }

    /// `mu(tau) = mu_0 + p^2 E(tau)`.
    pub fn mu_at(&self, tau: f64) -> f64 {
        self.mu0 + self.p2 * self.einbein.integral(self.tau_start, tau)
    }

    /// `x(tau) = x_0 + p (2 E mu_0 + p^2 E^2)`.
    pub fn x_closed_form(&self, tau: f64) -> FourVector {
        let big_e = self.einbein.integral(self.tau_start, tau);
        self.start.x() + self.p.scale(2.0 * big_e * self.mu0 + self.p2 * big_e * big_e)
    }

    /// `tau_bar(tau) = int 2 m mu e dtau = m (2 mu_0 E + p^2 E^2)`.
    pub fn tau_bar_at(&self, tau: f64) -> f64 {
        let big_e = self.einbein.integral(self.tau_start, tau);
        self.mass * (2.0 * self.mu0 * big_e + self.p2 * big_e * big_e)
    }

    /// Parameter value in the sampled window where `tau_bar` is reached,
    /// by bisection on the closed form. `None` outside the window or when
    /// the window contains a turning point.
    pub fn tau_at_tau_bar(&self, tau_bar: f64) -> Option<f64> {
        let (a, b) = (self.samples.first()?.tau, self.samples.last()?.tau);
        if turning_point(self).is_some() {
            return None;
        }
        let (fa, fb) = (self.tau_bar_at(a) - tau_bar, self.tau_bar_at(b) - tau_bar);
        let slack = 1e-12 * (1.0 + tau_bar.abs());
        if fa.abs() <= slack {
            return Some(a);
        }
        if fb.abs() <= slack {
            return Some(b);
        }
        if fa * fb > 0.0 {
            return None;
        }
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.tau_bar_at(mid) - tau_bar;
            if fm == 0.0 || hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                return Some(mid);
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Exact position at a given proper time.
    pub fn x_on_tau_bar(&self, tau_bar: f64) -> Option<FourVector> {
        self.tau_at_tau_bar(tau_bar).map(|t| self.state_at(t).x())
    }

    /// Position at a given proper time, interpolated linearly between samples.
    pub fn x_at_tau_bar(&self, tau_bar: f64) -> Option<FourVector> {
        let s = &self.samples;
        let tb: Vec<f64> = s.iter().map(|x| x.tau_bar).collect::<Option<_>>()?;
        let increasing = tb.last()? >= tb.first()?;
        let (lo, hi) = if increasing {
            (tb[0], *tb.last()?)
        } else {
            (*tb.last()?, tb[0])
        };
        if tau_bar < lo - 1e-12 || tau_bar > hi + 1e-12 {
            return None;
        }
        for k in 0..s.len() - 1 {
            let (a, b) = (tb[k], tb[k + 1]);
            let inside = if increasing {
                tau_bar >= a && tau_bar <= b
            } else {
                tau_bar <= a && tau_bar >= b
            };
            if inside || k == s.len() - 2 {
                let w = if b != a { (tau_bar - a) / (b - a) } else { 0.0 };
                return Some(s[k].x + (s[k + 1].x - s[k].x).scale(w));
            }
        }
        None
    }

    /// Writes one row per sample: tau, tau_bar, x^mu, p_mu, mu, the
    /// mass-shell residual and the Noether charge magnitudes.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "tau", "tau_bar", "x0", "x1", "x2", "x3", "p_0", "p_1", "p_2", "p_3", "mu",
            "mass_shell_residual", "J_norm", "j_abs",
        ])?;
        for s in &self.samples {
            let pl = s.p.lower();
            let mut row = vec![
                fmt_float(s.tau),
                s.tau_bar.map(fmt_float).unwrap_or_default(),
            ];
            row.extend(s.x.0.iter().map(|&v| fmt_float(v)));
            row.extend(pl.iter().map(|&v| fmt_float(v)));
            row.push(fmt_float(s.mu));
            row.push(fmt_float(s.mass_shell_residual));
            row.push(fmt_float(s.noether.j_ab_norm()));
            row.push(fmt_float(s.noether.j.abs()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Attaches `tau_bar` to every sample. Fails when mu vanishes identically or
/// changes sign inside the window.
pub fn proper_time_reparametrize(traj: &Trajectory) -> Result<Trajectory> {
    let scale = traj.mu0.abs().max(traj.p2.abs()).max(1e-300);
    if traj.samples.iter().all(|s| s.mu.abs() <= 1e-14 * scale.max(1.0)) {
        return Err(Error::Domain(
            "mu vanishes identically; proper time is not defined".into(),
        ));
    }
    let s = &traj.samples;
    for k in 0..s.len() {
        let zero_here = s[k].mu.abs() <= 1e-14 * scale.max(1.0);
        let flips = k + 1 < s.len() && s[k].mu * s[k + 1].mu < 0.0;
        if zero_here || flips {
            let lo = s[k.saturating_sub(usize::from(zero_here))].tau;
            let hi = s[(k + 1).min(s.len() - 1)].tau;
            return Err(Error::TurningPoint { lo, hi });
        }
    }
    let mut out = traj.clone();
    for smp in &mut out.samples {
        smp.tau_bar = Some(traj.tau_bar_at(smp.tau));
    }
    Ok(out)
}

/// First zero of mu in the sampled window, located by bisection on the
/// closed form to 1e-12 in tau. `None` when mu keeps its sign or vanishes
/// identically.
pub fn turning_point(traj: &Trajectory) -> Option<f64> {
    if traj.mu0 == 0.0 && traj.p2 == 0.0 {
        return None;
    }
    let s = &traj.samples;
    for k in 0..s.len() {
        let a = traj.mu_at(s[k].tau);
        if a == 0.0 {
            return Some(s[k].tau);
        }
        if k + 1 < s.len() {
            let b = traj.mu_at(s[k + 1].tau);
            if a * b < 0.0 {
                let (mut lo, mut hi) = (s[k].tau, s[k + 1].tau);
                let mut flo = a;
                for _ in 0..200 {
                    if hi - lo <= 1e-12 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let fm = traj.mu_at(mid);
                    if fm == 0.0 {
                        return Some(mid);
                    }
                    if fm * flo < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
    }
    None
}

/// `max |x(tau_0 + s) - x(tau_0 - s)|` over the given offsets.
pub fn double_cover_residual(traj: &Trajectory, tau0: f64, offsets: &[f64]) -> f64 {
    offsets.iter().fold(0.0, |acc, &s| {
        let a = traj.state_at(tau0 + s).x();
        let b = traj.state_at(tau0 - s).x();
        acc.max(a.max_abs_diff(&b))
    })
}
