use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("covariance is not a physical state (min eigenvalue of cov + iΩ = {min_eigenvalue:e})")]
    InvalidState { min_eigenvalue: f64 },

    #[error("covariance is not symmetric (|cov[{i}][{j}] - cov[{j}][{i}]| = {asymmetry:e})")]
    Asymmetric { i: usize, j: usize, asymmetry: f64 },

    #[error("expected a state in the {expected} convention, found {found}")]
    Convention {
        expected: &'static str,
        found: &'static str,
    },

    #[error("target dip {target} unreachable at alpha_l = {alpha_l}; attainable range is [{attainable_min}, {attainable_max})")]
    Calibration {
        alpha_l: f64,
        target: f64,
        attainable_min: f64,
        attainable_max: f64,
    },

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("window '{window}' overlaps a saturated pulse window")]
    SentinelContamination { window: String },

    #[error("malformed shot file at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("truncated shot file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
