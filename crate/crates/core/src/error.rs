use thiserror::Error;

/// Errors raised by the laboratory. Numeric hard errors map to exit code 3
/// in the runner, configuration problems to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero vector has no slope")]
    ZeroVector,
    #[error("vector has a nonzero stable component; slopes live in E^cu")]
    NotCenterUnstable,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("splitting is not dominated: ||A|E|| = {norm_e}, m(A|F) = {conorm_f}")]
    NotDominated { norm_e: f64, conorm_f: f64 },
    #[error("invalid splitting rates: {0}")]
    InvalidRates(String),
    #[error("chart point {0:?} lies outside the chart box")]
    OutsideChart(Vec<f64>),
    #[error("inversion of h did not converge in {iterations} iterations (last step {last_step:e})")]
    InversionDiverged { iterations: usize, last_step: f64 },
    #[error("chart inconsistency: {0}")]
    ChartInconsistency(String),
    #[error("invalid perturbation parameters: {0}")]
    InvalidParams(String),
    #[error("base point is periodic or nearly so (return after {period} steps, distance {distance:e})")]
    PeriodicBasePoint { period: usize, distance: f64 },
    #[error("chart radius {gamma} too large: {reason}")]
    ChartTooLarge { gamma: f64, reason: String },
    #[error("fundamental-domain reduction did not terminate after {0} generator applications")]
    ReductionDiverged(usize),
    #[error("tracked central direction collapsed into E^u (center component {0:e})")]
    TrackerCollapse(f64),
    #[error("jacobian is singular to working precision")]
    SingularJacobian,
    #[error("observable returned a non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("bump construction failed: {0}")]
    BumpConstruction(String),
    #[error("invalid system construction: {0}")]
    InvalidSystem(String),
    #[error("{0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code: 1 for invariant failures, 2 for usage errors and 3
    /// for numeric hard errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 1,
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidRates(_) | Error::Precondition(_) | Error::ChartTooLarge { .. } | Error::DimensionMismatch { .. } => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
