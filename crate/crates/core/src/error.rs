use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid delay profile: {0}")]
    InvalidDelay(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("check not applicable: {0}")]
    Inapplicable(String),

    #[error("grid function shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error(
        "history lookup at t = {requested} is outside the buffered range [{oldest}, {newest}]"
    )]
    Coverage {
        requested: f64,
        oldest: f64,
        newest: f64,
    },

    #[error("transport CFL violated: dt * max speed = {courant_step} > d_rho = {d_rho}; use n_rho <= {suggested_n_rho}")]
    TransportCfl {
        courant_step: f64,
        d_rho: f64,
        suggested_n_rho: usize,
    },

    #[error("solution diverged at t = {t}: max |u| = {max_abs}")]
    Divergence { t: f64, max_abs: f64 },

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
