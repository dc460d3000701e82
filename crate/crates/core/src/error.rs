use std::path::PathBuf;

/// Errors raised by the contact toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular matrix: pivot {pivot:e} at row {row} below threshold {threshold:e}")]
    SingularMatrix { row: usize, pivot: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("mismatched interfaces: {0}")]
    MismatchedInterfaces(String),

    #[error("slave node {node} has no projection onto the master surface")]
    NoProjection { node: usize },

    #[error("reference quantity has zero norm")]
    ZeroReference,

    #[error("trace too short or degenerate to estimate a convergence order")]
    InsufficientTrace,

    #[error("active-set iteration revisited a previous active set after {outer} outer iterations")]
    CycleDetected { outer: usize },

    #[error("active-set iteration did not settle within {0} outer iterations")]
    MaxOuter(usize),

    #[error("no candidate active set satisfies the KKT conditions")]
    NoKktPoint,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
