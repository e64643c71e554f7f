//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid physical or distribution parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Inconsistent or infeasible scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Configuration file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two floe centers coincide; the contact normal is undefined.
    #[error("degenerate contact between floes {0} and {1}: coincident centers")]
    DegenerateContact(u64, u64),

    /// A state variable became non-finite during integration.
    #[error("numerical blowup at t = {time} s: floe {floe_id} has a non-finite state")]
    NumericalBlowup { time: f64, floe_id: u64 },

    /// A step error wrapped with the simulation timestamp.
    #[error("step failed at t = {time} s: {source}")]
    StepFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    /// Not enough samples for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A statistic is undefined because a series has zero variance.
    #[error("undefined statistic: {0}")]
    ZeroVariance(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
