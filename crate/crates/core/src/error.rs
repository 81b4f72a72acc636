use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("context mismatch: algebras with n = {left} and n = {right}")]
    ContextMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("turning point of mu inside the window, bracketed by tau in [{lo}, {hi}]")]
    TurningPoint { lo: f64, hi: f64 },

    #[error("observables are not simultaneously diagonalizable: commutator residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotGaugeable { residual: f64, tolerance: f64 },

    #[error("degenerate induced metric at {count} node(s), first at (tau index {tau_index}, sigma index {sigma_index})")]
    DegenerateMetric {
        count: usize,
        tau_index: usize,
        sigma_index: usize,
    },

    #[error("frame condition violated: {0}")]
    Frame(String),

    #[error("matrix is not unitary: max |U^dagger U - 1| = {0:.3e}")]
    NonUnitary(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
