use thiserror::Error;

/// Errors raised by estimation, identification and diagnostics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot parse cell at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("regressor Gram matrix is numerically singular (reciprocal condition {rcond:e})")]
    SingularRegressors { rcond: f64 },

    #[error("invalid lag order: {0}")]
    InvalidOrder(String),

    #[error("empty variable selection")]
    EmptySelection,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("A(1) is ill-conditioned (reciprocal condition {rcond:e}); long-run restrictions are unreliable near a unit root")]
    NearUnitRoot { rcond: f64 },

    #[error("weak instrument: first-stage F = {f_stat:.3} < 10")]
    WeakInstrument { f_stat: f64 },

    #[error("candidate is under-identified (degrees of freedom {df})")]
    NegativeDf { df: i64 },

    #[error("no impact vector satisfies the restrictions")]
    InfeasibleRestrictions,

    #[error("too many inequality restrictions ({0} > 20)")]
    TooManyRestrictions(usize),

    #[error("variable {0} has zero forecast-error variance")]
    DegenerateVariance(usize),

    #[error("impact matrix is singular")]
    SingularImpact,

    #[error("rank deficient loading: {0}")]
    RankDeficient(String),

    #[error("loading product is not invertible: {0}")]
    NonInvertibleLoading(String),

    #[error("selected subset has a singular residual scatter")]
    DegenerateSubset,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("unstable data-generating process (spectral radius {0})")]
    UnstableDgp(f64),
}

impl Error {
    /// Stable machine-readable name used in CLI error objects.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Io(_) => "IoError",
            Error::Parse { .. } => "ParseError",
            Error::Shape(_) => "ShapeError",
            Error::Domain(_) => "DomainError",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InsufficientData(_) => "InsufficientData",
            Error::SingularRegressors { .. } => "SingularRegressors",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::EmptySelection => "EmptySelection",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::NearUnitRoot { .. } => "NearUnitRoot",
            Error::WeakInstrument { .. } => "WeakInstrument",
            Error::NegativeDf { .. } => "NegativeDf",
            Error::InfeasibleRestrictions => "InfeasibleRestrictions",
            Error::TooManyRestrictions(_) => "TooManyRestrictions",
            Error::DegenerateVariance(_) => "DegenerateVariance",
            Error::SingularImpact => "SingularImpact",
            Error::RankDeficient(_) => "RankDeficient",
            Error::NonInvertibleLoading(_) => "NonInvertibleLoading",
            Error::DegenerateSubset => "DegenerateSubset",
            Error::DegenerateSeries(_) => "DegenerateSeries",
            Error::BootstrapFailures { .. } => "BootstrapFailures",
            Error::UnstableDgp(_) => "UnstableDgp",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
