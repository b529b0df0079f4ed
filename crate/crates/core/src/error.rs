use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout conflict: label `{0}` appears more than once")]
    LayoutConflict(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid factor permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (anti-Hermitian part {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("not a density matrix: {0}")]
    NotState(String),

    #[error("not a CPTP map: {0}")]
    NotCptp(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("overlap vector must have unit norm, got {0}")]
    NonUnitOverlap(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
