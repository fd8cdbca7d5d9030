use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type. Each variant maps to a distinct failure mode of the
/// pipeline so callers (and the CLI) can report the offending stage precisely.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A moment matrix whose numerical rank fell below the requested k.
    #[error("degenerate moment: {matrix} has numerical rank {rank} < k = {k}")]
    DegenerateMoment {
        matrix: String,
        rank: usize,
        k: usize,
    },

    /// One or more estimated components collapsed to zero norm.
    #[error("degenerate component(s) at indices {0:?}")]
    DegenerateComponent(Vec<usize>),

    #[error("iterative solver did not converge: {what} (residual {residual:.3e} after {iters} iterations)")]
    Convergence {
        what: String,
        residual: f64,
        iters: usize,
    },

    #[error("divergence in stochastic updates at iteration {iter}: non-finite values; try a smaller learn_rate_0")]
    Divergence { iter: usize },

    #[error("dimension mismatch: {0}")]
    Dim(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
