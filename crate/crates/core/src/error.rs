use std::fmt;
use std::path::PathBuf;

/// One violated density-matrix invariant with its measured magnitude.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityViolation {
    Hermiticity { defect: f64 },
    Trace { deviation: f64 },
    Positivity { min_eigenvalue: f64 },
}

impl fmt::Display for DensityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hermiticity { defect } => write!(f, "hermiticity defect {defect:.3e}"),
            Self::Trace { deviation } => write!(f, "|Tr - 1| = {deviation:.3e}"),
            Self::Positivity { min_eigenvalue } => {
                write!(f, "negative eigenvalue {min_eigenvalue:.6e}")
            }
        }
    }
}

fn join_violations(v: &[DensityViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||M - M^H||_F = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("not a density matrix: {}", join_violations(.0))]
    InvalidDensity(Vec<DensityViolation>),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate eigenvalue pair ({0}, {0}): difference quotient undefined")]
    DegeneratePair(f64),

    #[error("trivial Darboux transformation: Im mu must be nonzero")]
    TrivialDarboux,

    #[error("seed constraint `{name}` violated: {detail}")]
    Constraint { name: &'static str, detail: String },

    #[error("seed is not positive: {condition} fails ({detail})")]
    Positivity { condition: &'static str, detail: String },

    #[error("Lax eigenvalue equation inconsistent: residual {residual:.3e}")]
    LaxInconsistency { residual: f64 },

    #[error("singular normalisation F(t) = {value:.3e} at t = {t}")]
    SingularDenominator { t: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no switching: gamma1 * gamma3 = 0 yields a constant solution")]
    ConstantSolution,

    #[error("unsupported nonlinearity: {0}")]
    UnsupportedNonlinearity(String),

    #[error("field factorisation failed: {0}")]
    Factorization(String),

    #[error("degenerate pulse velocity: (c/v)^2 - 1 = {0:.3e}")]
    DegenerateVelocity(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("step size rejected: {0}")]
    StepSize(String),

    #[error("duplicate verification check `{0}`")]
    DuplicateCheck(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed time series: {detail}")]
    MalformedSeries { path: PathBuf, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
