use alloc::string::String;

/// Errors raised by the estimation and diagnostics routines.
///
/// Messages are prefixed with the module that raised them so the CLI can
/// surface them unchanged.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset: need at least {min} observations, found {found}")]
    TooFewObservations { found: usize, min: usize },
    #[error("dataset: need at least 2 columns (one regressor and the dependent), found {0}")]
    TooFewColumns(usize),
    #[error("dataset: {names} column names for {columns} columns")]
    NameCountMismatch { names: usize, columns: usize },
    #[error("dataset: dependent index {index} out of range for {columns} columns")]
    DependentOutOfRange { index: usize, columns: usize },
    #[error("dataset: non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },
    #[error("dataset: column `{0}` has zero variance")]
    DegenerateColumn(String),
    #[error("dataset: correlation matrix is invalid: {0}")]
    InvalidCorrelation(String),
    #[error("linalg: expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("linalg: matrix is not symmetric")]
    NotSymmetric,
    #[error("linalg: dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("spectral: smallest eigenvalue {0:e} is not above the rank threshold (perfect multicollinearity)")]
    RankDeficient(f64),
    #[error("spectral: penalty entry {index} is {value}; entries must be finite and nonnegative")]
    InvalidPenalty { index: usize, value: f64 },
    #[error("spectral: penalty index {index} out of range for {m} regressors")]
    PenaltyIndexOutOfRange { index: usize, m: usize },
    #[error("estimator: shifted eigenvalue {index} is not positive")]
    NonPositiveShift { index: usize },
    #[error("estimator: {n} observations leave no residual degrees of freedom for {m} coefficients")]
    NoResidualDegreesOfFreedom { n: usize, m: usize },
    #[error("estimator: sigma^2 must be finite and nonnegative, got {0}")]
    InvalidVariance(f64),
    #[error("diagnostics: auxiliary cross-product for regressor {0} is singular")]
    SingularAuxiliary(usize),
    #[error("selection: invalid grid: {0}")]
    InvalidGrid(String),
    #[error("selection: {0} vector is identically zero")]
    ZeroVector(&'static str),
    #[error("selection: need at least 2 regressors, found {0}")]
    TooFewRegressors(usize),
    #[error("inference: {0}")]
    InvalidBootstrap(String),
    #[error("inference: gave up after {0} redraws of degenerate bootstrap samples")]
    BootstrapExhausted(usize),
}

impl Error {
    /// True for failures of the numerics (rank deficiency, singular systems)
    /// rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient(_)
                | Error::NonPositiveShift { .. }
                | Error::SingularAuxiliary(_)
                | Error::BootstrapExhausted(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
