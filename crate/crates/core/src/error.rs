use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("precondition violated: {what} (worst at node {node}, r = {r:.6}, value {value:.6e})")]
    Precondition { what: String, node: usize, r: f64, value: f64 },

    #[error("hypothesis {which} failed: {detail}")]
    Hypothesis { which: String, detail: String },

    #[error("linear solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("flow diverged at t = {t:.6e}, node {node} (value {value:.6e})")]
    Divergence { t: f64, node: usize, value: f64 },

    #[error("construction invariant violated: {0}")]
    ConstructionInvariant(String),

    #[error("exhaustion did not converge: last sup-changes {history:?}")]
    Convergence { history: Vec<f64> },

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
