use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tabulated drive evaluated at t = {t} outside knot range [{lo}, {hi}]")]
    OutsideKnots { t: f64, lo: f64, hi: f64 },

    #[error("integrator step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error(
        "periodic state not reached: |n(t0 + tau) - n(t0)| = {residual:e} after {periods} periods"
    )]
    NonConvergence { residual: f64, periods: u64 },

    #[error("pole of the s-dependent occupation at x + s = {0}")]
    Pole(f64),

    #[error("counting field |s| = {s} outside the normalizability window |s| < x = {x}")]
    OutOfWindow { s: f64, x: f64 },

    #[error("requested order {requested} exceeds jet capacity {capacity}")]
    OrderOverflow { requested: usize, capacity: usize },

    #[error("cumulant generating function overflow: Re C = {re_c} exceeds {bound} at t = {t}")]
    Overflow { re_c: f64, bound: f64, t: f64 },

    #[error("Fock truncation unhealthy: top-level weight {weight:e} at t = {t} (N_max = {n_max})")]
    Truncation { weight: f64, t: f64, n_max: usize },

    #[error("counting window leakage: boundary weight {weight:e} at t = {t} (M = {window})")]
    Leakage { weight: f64, t: f64, window: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("window mismatch: {0} vs {1}")]
    WindowMismatch(usize, usize),

    #[error("distribution check failed: {0}")]
    Distribution(String),

    #[error("configuration parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidConfig(_) => "invalid_config",
            Error::OutsideKnots { .. } => "outside_knots",
            Error::StepFailure { .. } => "step_failure",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Pole(_) => "pole",
            Error::OutOfWindow { .. } => "out_of_window",
            Error::OrderOverflow { .. } => "order_overflow",
            Error::Overflow { .. } => "overflow",
            Error::Truncation { .. } => "truncation",
            Error::Leakage { .. } => "leakage",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::WindowMismatch(..) => "window_mismatch",
            Error::Distribution(_) => "distribution",
            Error::Parse(_) => "parse",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
