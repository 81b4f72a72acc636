//! Per-command JSON parameter blocks and their validation.

use cliffdyn::ensemble::ParticleSpec;
use cliffdyn::linalg::{is_hermitian, CMat, C64};
use cliffdyn::particle::EinbeinProfile;
use cliffdyn::spinor::FourVector;
use cliffdyn::string::SliceNode;
use serde::{Deserialize, Serialize};

/// A field-level configuration problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Default)]
struct Problems(Vec<FieldError>);

impl Problems {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(field, format!("must be a positive finite number, got {v}"));
        }
    }

    fn finite(&mut self, field: &str, v: f64) {
        if !v.is_finite() {
            self.push(field, "must be finite");
        }
    }

    fn at_least(&mut self, field: &str, v: usize, min: usize) {
        if v < min {
            self.push(field, format!("must be at least {min}, got {v}"));
        }
    }

    fn at_most(&mut self, field: &str, v: usize, max: usize) {
        if v > max {
            self.push(field, format!("must be at most {max}, got {v}"));
        }
    }

    fn span(&mut self, field: &str, s: (f64, f64)) {
        if !(s.0.is_finite() && s.1.is_finite() && s.1 > s.0) {
            self.push(field, format!("must be an increasing pair, got [{}, {}]", s.0, s.1));
        }
    }

    fn einbein(&mut self, field: &str, e: &EinbeinProfile, span: (f64, f64)) {
        if let Err(err) = e.validate() {
            self.push(field, err.to_string());
        } else if span.1 > span.0 && !(e.min_on(span.0, span.1) > 0.0) {
            self.push(field, format!("must be positive on [{}, {}]", span.0, span.1));
        }
    }

    fn finish(self) -> Result<(), Vec<FieldError>> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self.0)
        }
    }
}

/// Complex matrix written as separate real and imaginary row lists.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    fn check(&self, field: &str, p: &mut Problems) -> Option<CMat> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            p.push(format!("{field}.re"), "must be a non-empty square array");
            return None;
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                p.push(format!("{field}.im"), "must match the shape of re");
                return None;
            }
        }
        let m = CMat::from_fn(n, n, |i, j| {
            C64::new(
                self.re[i][j],
                self.im.as_ref().map_or(0.0, |im| im[i][j]),
            )
        });
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            p.push(field, "entries must be finite");
            return None;
        }
        Some(m)
    }

    pub fn to_matrix(&self) -> CMat {
        let n = self.re.len();
        CMat::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        })
    }
}

fn default_k() -> f64 {
    1.0
}

fn default_kappa() -> f64 {
    1.0
}

fn default_workers() -> usize {
    4
}

fn default_shots() -> usize {
    10_000
}

fn default_einbein() -> EinbeinProfile {
    EinbeinProfile::constant(1.0)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomResolve {
    pub n: usize,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ResolveConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Hermitian matrix to resolve into Clifford vectors.
    #[serde(default)]
    pub hermitian: Option<MatrixSpec>,
    /// Phase-space points to resolve into spinor pairs.
    #[serde(default)]
    pub phase_points: Vec<ParticleSpec>,
    /// Random Hermitian matrices covering every signature.
    #[serde(default)]
    pub random: Option<RandomResolve>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Exact,
    Rk4,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub m: f64,
    #[serde(default = "default_einbein")]
    pub einbein: EinbeinProfile,
    #[serde(default)]
    pub x: FourVector,
    /// Defaults to the rest-frame momentum `(m, 0, 0, 0)`.
    #[serde(default)]
    pub p: Option<FourVector>,
    #[serde(default)]
    pub mu0: f64,
    pub span: (f64, f64),
    pub steps: usize,
    #[serde(default)]
    pub integrator: Integrator,
    /// Also emit the proper-time reparametrized trajectory.
    #[serde(default)]
    pub reparametrize: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub particles: Vec<ParticleSpec>,
    /// Weight matrix, identity when absent.
    #[serde(default)]
    pub phi: Option<MatrixSpec>,
    pub m: f64,
    #[serde(default = "default_einbein")]
    pub einbein: EinbeinProfile,
    pub span: (f64, f64),
    pub steps: usize,
    /// Number of random unitaries for the invariance checks.
    #[serde(default = "default_unitaries")]
    pub unitaries: usize,
    /// Move the ensemble into a seeded random frame before evolving.
    #[serde(default = "default_true")]
    pub scramble: bool,
}

fn default_true() -> bool {
    true
}

fn default_unitaries() -> usize {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Wavepacket {
    pub x0: f64,
    pub p0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatmechConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Truncation size N.
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: f64,
    pub m: f64,
    /// Offset of the time-factor momentum.
    #[serde(default)]
    pub p0_offset: Option<f64>,
    pub tau_bar_max: f64,
    pub steps: usize,
    /// Spatial wavepackets, one per direction.
    pub packets: [Wavepacket; 3],
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReducedConfig {
    pub slice: Vec<SliceNode>,
    pub sigma_range: (f64, f64),
    pub tau_end: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StringConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub m: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub n_tau: usize,
    pub n_sigma: usize,
    /// Number of f-type pairs carrying the random field.
    #[serde(default = "default_field_pairs")]
    pub field_pairs: usize,
    #[serde(default)]
    pub reduced: Option<ReducedConfig>,
}

fn default_field_pairs() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Suites to run; all when empty.
    #[serde(default)]
    pub suites: Vec<String>,
}

/// Grid limit shared by the worldsheet commands.
pub const MAX_GRID: usize = 512;

impl ResolveConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        if self.hermitian.is_none() && self.phase_points.is_empty() && self.random.is_none() {
            p.push("resolve", "needs at least one of hermitian, phase_points, random");
        }
        if let Some(h) = &self.hermitian {
            if let Some(m) = h.check("hermitian", &mut p) {
                if !is_hermitian(&m, 1e-12) {
                    p.push("hermitian", "matrix is not Hermitian");
                }
            }
        }
        for (i, s) in self.phase_points.iter().enumerate() {
            check_spec(&mut p, &format!("phase_points[{i}]"), s);
        }
        if let Some(r) = &self.random {
            p.at_least("random.n", r.n, 1);
            p.at_most("random.n", r.n, 64);
            p.at_least("random.count", r.count, 1);
        }
        p.finish()
    }
}

fn check_spec(p: &mut Problems, field: &str, s: &ParticleSpec) {
    for (name, v) in [("x", &s.x), ("p", &s.p)] {
        if v.0.iter().any(|c| !c.is_finite()) {
            p.push(format!("{field}.{name}"), "components must be finite");
        }
    }
    p.finite(&format!("{field}.mu"), s.mu);
    if s.p.0[0] < 0.0 || s.p.norm2() < -1e-12 * (1.0 + s.p.max_abs().powi(2)) {
        p.push(format!("{field}.p"), "must be future-directed and non-spacelike");
    }
}

impl ParticleConfig {
    pub fn momentum(&self) -> FourVector {
        self.p.unwrap_or(FourVector::new(self.m, 0.0, 0.0, 0.0))
    }

    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        p.positive("m", self.m);
        p.span("span", self.span);
        p.at_least("steps", self.steps, 1);
        p.at_most("steps", self.steps, 10_000_000);
        p.finite("mu0", self.mu0);
        p.einbein("einbein", &self.einbein, self.span);
        if self.x.0.iter().any(|c| !c.is_finite()) {
            p.push("x", "components must be finite");
        }
        if let Some(mom) = &self.p {
            if mom.0.iter().any(|c| !c.is_finite()) {
                p.push("p", "components must be finite");
            } else if mom.0[0] < 0.0 || mom.norm2() < -1e-12 * (1.0 + mom.max_abs().powi(2)) {
                p.push("p", "must be future-directed and non-spacelike");
            }
        }
        p.finish()
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        if self.particles.is_empty() {
            p.push("particles", "must list at least one particle");
        }
        p.at_most("particles", self.particles.len(), 64);
        for (i, s) in self.particles.iter().enumerate() {
            check_spec(&mut p, &format!("particles[{i}]"), s);
        }
        p.positive("m", self.m);
        p.span("span", self.span);
        p.at_least("steps", self.steps, 2);
        if self.steps % 2 != 0 {
            p.push("steps", "must be even");
        }
        p.einbein("einbein", &self.einbein, self.span);
        if let Some(phi) = &self.phi {
            if let Some(m) = phi.check("phi", &mut p) {
                if m.nrows() != self.particles.len() {
                    p.push("phi", "must be N x N for N particles");
                } else if !is_hermitian(&m, 1e-12) {
                    p.push("phi", "matrix is not Hermitian");
                }
            }
        }
        p.finish()
    }
}

impl MatmechConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        p.at_least("n", self.n, 8);
        p.at_most("n", self.n, 256);
        p.positive("m", self.m);
        if !(self.k.is_finite() && self.k != 0.0) {
            p.push("k", "must be finite and nonzero");
        }
        if let Some(o) = self.p0_offset {
            p.finite("p0_offset", o);
        }
        p.positive("tau_bar_max", self.tau_bar_max);
        p.at_least("steps", self.steps, 1);
        p.at_least("shots", self.shots, 1);
        p.at_least("workers", self.workers, 1);
        for (i, w) in self.packets.iter().enumerate() {
            p.finite(&format!("packets[{i}].x0"), w.x0);
            p.finite(&format!("packets[{i}].p0"), w.p0);
        }
        p.finish()
    }
}

impl StringConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        if !(self.m >= 0.0 && self.m.is_finite()) {
            p.push("m", format!("must be a non-negative finite number, got {}", self.m));
        }
        p.finite("kappa", self.kappa);
        p.at_least("n_tau", self.n_tau, 3);
        p.at_least("n_sigma", self.n_sigma, 3);
        p.at_most("n_tau", self.n_tau, MAX_GRID);
        p.at_most("n_sigma", self.n_sigma, MAX_GRID);
        p.at_least("field_pairs", self.field_pairs, 2);
        p.at_most("field_pairs", self.field_pairs, 64);
        if let Some(r) = &self.reduced {
            p.positive("m", self.m);
            p.at_least("reduced.slice", r.slice.len(), 3);
            p.at_most("reduced.slice", r.slice.len(), MAX_GRID);
            p.span("reduced.sigma_range", r.sigma_range);
            p.positive("reduced.tau_end", r.tau_end);
            p.at_least("reduced.steps", r.steps, 2);
            for (i, s) in r.slice.iter().enumerate() {
                let field = format!("reduced.slice[{i}]");
                check_spec(&mut p, &field, &ParticleSpec { x: s.x, p: s.p, mu: s.mu });
                if !(s.mu > 0.0) {
                    p.push(format!("{field}.mu"), "must be positive in the reduced frame");
                }
                if (s.p.norm2() - self.m * self.m).abs() > 1e-9 * self.m.max(1.0).powi(2) {
                    p.push(format!("{field}.p"), "must lie on the mass shell p^2 = m^2");
                }
            }
        }
        p.finish()
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut p = Problems::default();
        for (i, s) in self.suites.iter().enumerate() {
            if !cliffdyn::verify::SUITES.contains(&s.as_str()) {
                p.push(
                    format!("suites[{i}]"),
                    format!("unknown suite '{s}', expected one of {}", cliffdyn::verify::SUITES.join(", ")),
                );
            }
        }
        p.finish()
    }
}
