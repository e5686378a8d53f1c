use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// The requested state is too close to the edge of the physical set for
    /// the potential to be evaluated; callers treat the potential as +∞.
    #[error("near-boundary state: margin {margin:.3e} below floor {floor:.3e}")]
    NearBoundary { margin: f64, floor: f64 },

    #[error("multiplier solve did not converge after {iterations} iterations (moment residual {residual:.3e}, target {target:?})")]
    Convergence {
        iterations: usize,
        residual: f64,
        target: [f64; 3],
    },

    #[error("infeasible state in cell ({cx}, {cy})")]
    Infeasible { cx: usize, cy: usize },

    #[error("format error at row {row}, column {column}: {message}")]
    Format {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn format(row: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Format {
            row,
            column,
            message: message.into(),
        }
    }
}
