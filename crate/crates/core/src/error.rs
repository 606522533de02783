use thiserror::Error;

/// Errors raised by the spectral pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gamma function pole at s = {0}")]
    Pole(i64),

    #[error("form degree q = {q} out of range 0..={n}")]
    DegreeOutOfRange { q: usize, n: usize },

    #[error("tolerance {requested:e} not achievable; best certified bound is {achieved:e}")]
    ToleranceUnachievable { requested: f64, achieved: f64 },

    #[error("quadrature did not converge: residual {residual:e} after {evaluations} evaluations")]
    QuadratureNonConvergence { residual: f64, evaluations: usize },

    #[error("ill-conditioned least-squares design (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("determinant routes disagree: |{abks} - {epstein}| exceeds {tol:e}")]
    RouteDisagreement { abks: f64, epstein: f64, tol: f64 },

    #[error("fields live on different tori")]
    TorusMismatch,

    #[error("field type mismatch: {0}")]
    TypeMismatch(String),

    #[error("first-order datum {index} is not admissible: {reason}")]
    NonHarmonicSeed { index: usize, reason: String },

    #[error("mode with |xi| = {norm} exceeds mode radius {radius}")]
    ModeOverflow { norm: f64, radius: f64 },

    #[error("Maurer-Cartan equation obstructed at order {order}: residual {residual:e}")]
    Obstructed { order: usize, residual: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("identity violated: {0}")]
    IdentityViolation(String),

    #[error("cache i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ToleranceUnachievable { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::IllConditioned { .. }
                | Error::RouteDisagreement { .. }
                | Error::NonFinite(_)
                | Error::Obstructed { .. }
                | Error::ModeOverflow { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
