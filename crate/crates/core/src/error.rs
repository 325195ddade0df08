//! Error type shared by the flow, solver, and reporting layers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid family parameters for `{family}`: {reason}")]
    InvalidFamily { family: String, reason: String },

    #[error("dimension mismatch: expected n = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("point is not a translated point of the {k}-th iterate: residual norm {residual} exceeds tolerance {tol}")]
    NotTranslated { k: usize, residual: f64, tol: f64 },

    #[error("iteration lemma precondition failed: {which} residual {residual} exceeds tolerance {tol}")]
    LemmaPrecondition {
        which: String,
        residual: f64,
        tol: f64,
    },

    #[error("config error in `{path}`, field `{field}`: {reason}")]
    Config {
        path: String,
        field: String,
        reason: String,
    },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
