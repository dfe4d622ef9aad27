use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: i64 },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error(
        "graph is disconnected ({components} components); enable largest-component extraction"
    )]
    Disconnected { components: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state invariant violated: {0}")]
    InvalidState(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("degenerate dominant eigenvalue (gap {gap:e})")]
    DegenerateEigenvalue { gap: f64 },

    #[error("u is not proportional to S^-1 v (relative spread {spread:e})")]
    NotProportional { spread: f64 },

    #[error("entrant already survives without a community: tau2 * lambda(S A) = {value}")]
    AlreadySupercritical { value: f64 },

    #[error("requested budget {requested} is not reachable; the critical budget is {critical}")]
    InfeasibleBudget { requested: f64, critical: f64 },

    #[error("budget surplus {surplus} cannot be spent: every scored node is at u = 1")]
    UnspendableBudget { surplus: f64 },

    #[error("probe {probe} is too large: slope changed by {change:.3} when halved")]
    ProbeTooLarge { probe: f64, change: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
