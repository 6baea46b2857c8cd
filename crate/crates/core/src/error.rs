use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("non-positive conditional variance at location {index} (h = {value})")]
    NonPositiveH { index: usize, value: f64 },

    #[error("innovation at location {index} is zero; log|eps| is undefined")]
    ZeroInnovation { index: usize },

    #[error("observation at location {index} is zero; log-link models need y != 0")]
    ZeroObservation { index: usize },

    #[error("fixed-point inversion did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("numerical overflow: {0}")]
    NumericalOverflow(&'static str),

    #[error("Jacobian determinant is zero or not finite")]
    SingularJacobian,

    #[error("rejection budget exhausted after {attempts} draws")]
    RejectionBudgetExhausted { attempts: usize },

    #[error("optimisation failed: {0}")]
    OptimFailed(String),

    #[error("every candidate model failed to fit")]
    AllFitsFailed,

    #[error("input vector is constant")]
    ConstantInput,

    #[error("weight matrix has no positive entries")]
    EmptyWeights,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used for the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularSystem => "SingularSystem",
            Error::NonPositiveH { .. } => "NonPositiveH",
            Error::ZeroInnovation { .. } => "ZeroInnovation",
            Error::ZeroObservation { .. } => "ZeroObservation",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NumericalOverflow(_) => "NumericalOverflow",
            Error::SingularJacobian => "SingularJacobian",
            Error::RejectionBudgetExhausted { .. } => "RejectionBudgetExhausted",
            Error::OptimFailed(_) => "OptimFailed",
            Error::AllFitsFailed => "AllFitsFailed",
            Error::ConstantInput => "ConstantInput",
            Error::EmptyWeights => "EmptyWeights",
            Error::Precondition(_) => "Precondition",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}
