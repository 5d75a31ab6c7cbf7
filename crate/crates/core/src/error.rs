use thiserror::Error;

use crate::analysis::{FuzzReport, GuaranteeViolation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The scenario document could not be parsed.
    #[error("invalid scenario JSON at `{path}`: {message}")]
    Json { path: String, message: String },

    #[error("dimension mismatch in {field} (at `{path}`): {detail}")]
    DimensionMismatch {
        field: String,
        path: String,
        detail: String,
    },

    #[error("{field} (at `{path}`) contains a non-finite entry")]
    NonFinite { field: String, path: String },

    /// Symmetric factorization failed, or the matrix is not symmetric.
    #[error("{matrix} is not symmetric positive definite")]
    NotPositiveDefinite { matrix: String },

    #[error("measurement times must be strictly increasing (violated at `measurement_times[{index}]`)")]
    NonIncreasingTimes { index: usize },

    #[error("budget r_{time} = {value} outside [0, {max}] (at `budgets[{index}]`)", time = index + 1)]
    BudgetOutOfRange { index: usize, value: i64, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("sensor {sensor} is already selected at time index {time}")]
    SensorAlreadySelected { time: usize, sensor: usize },

    #[error("dense oracle size {size} exceeds cap {cap}")]
    OracleCapExceeded { size: usize, cap: usize },

    #[error("schedule enumeration count {count} exceeds cap {cap}")]
    EnumerationCapExceeded { count: u128, cap: u128 },

    #[error("analytic worst value {analytic} disagrees with exhaustive maximum {exhaustive}")]
    OracleDisagreement { analytic: f64, exhaustive: f64 },

    #[error("approximation guarantee violated: ratio {}", .0.certificate.ratio)]
    GuaranteeViolated(Box<GuaranteeViolation>),

    #[error("{} property violated in {} of {} trials", .0.property, .0.violation_count, .0.trials)]
    PropertyViolated(Box<FuzzReport>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
