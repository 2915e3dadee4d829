//! Error taxonomy shared by every module.
//!
//! The CLI maps these onto exit codes: infeasible problems exit with 2,
//! assumption violations with 3, numerical failures with 4, and everything
//! else (bad input, I/O, malformed configs) with 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model assumption required by the requested operation does not hold.
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),

    /// The optimization problem has an empty feasible set.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// A linear solve or iteration failed to produce a trustworthy answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A scenario configuration is malformed; the message names the field.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
