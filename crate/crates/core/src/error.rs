use thiserror::Error;

/// Errors reported by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("sample times are not uniform: sample {index} deviates by {deviation:e} from t_start + k*dt")]
    NonUniformGrid { index: usize, deviation: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("optical depth must be positive (got {0}); no optimal pulse exists for a transparent medium")]
    SingularMedium(f64),

    #[error("time window too short: {truncated:e} of the pulse probability lies before t = {t_start}; extend the window to t_min <= {required_t_min}")]
    WindowTooShort {
        truncated: f64,
        t_start: f64,
        required_t_min: f64,
    },

    #[error("input carries zero probability before t = 0; efficiency is undefined")]
    UndefinedEfficiency,

    #[error("{0}")]
    Configuration(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
