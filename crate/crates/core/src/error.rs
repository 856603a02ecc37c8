//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or run parameter failed validation.
    #[error("invalid parameter `{name}`: {reason} (got {value})")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An operation was called outside its domain (bad lengths, missing
    /// snapshots, degenerate inputs where a defined result is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// A solution invariant (non-negativity, conservation, a-priori bound)
    /// was violated beyond tolerance at a recorded snapshot.
    #[error("instability: {field}[{cell}] = {value} at t = {t} violates {constraint}")]
    Instability {
        field: &'static str,
        cell: usize,
        t: f64,
        value: f64,
        constraint: String,
    },

    /// A non-finite value appeared in the solution.
    #[error("blow-up: non-finite {field}[{cell}] at t = {t}")]
    BlowUp { field: &'static str, cell: usize, t: f64 },

    /// Run-configuration parsing or consistency failure.
    #[error("config error: {0}")]
    Config(String),

    /// A sensitivity model evaluation failed; indices computed on partial
    /// data would be biased, so the whole run is aborted.
    #[error("sensitivity evaluation failed ({matrix} row {row}): {reason}")]
    FailedEvaluation {
        matrix: String,
        row: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
