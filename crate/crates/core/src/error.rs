use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("integration diverged at step {step}: non-finite state")]
    Divergence { step: usize },

    #[error("position radius {radius} km is inside the guard radius {guard} km")]
    GuardRadius { radius: f64, guard: f64 },

    #[error("time {t} s is outside reference orbit coverage [{start}, {end}]")]
    OutsideReference { t: f64, start: f64, end: f64 },

    #[error("degenerate triangle {index} in mesh")]
    DegenerateTriangle { index: usize },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("normal system is rank deficient (under-sampled fit); add samples or regularization")]
    RankDeficient,

    #[error("spacecraft separation is zero at t = {t} s inside an observation window")]
    ZeroSeparation { t: f64 },

    #[error("{path}: {message}")]
    Spec { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn spec(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
