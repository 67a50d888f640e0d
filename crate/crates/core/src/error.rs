use thiserror::Error;

/// Errors produced by the design, sampling and interpolation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rejection sampling gave up after {attempts} attempts (domain volume near zero or indicator broken?)")]
    SamplingExhausted { attempts: usize },

    #[error("membership oracle failed: {0}")]
    Membership(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no hits in {samples} samples; increase the sample count")]
    NoHits { samples: usize },

    #[error("gram matrix is ill-conditioned (condition estimate {condition:.3e}, last nugget {nugget:.1e})")]
    IllConditioned { condition: f64, nugget: f64 },

    #[error("truth value at index {index} is zero; relative error is undefined")]
    ZeroTruth { index: usize },

    #[error("{} point(s) outside the domain, indices {indices:?}", indices.len())]
    OutsideDomain { indices: Vec<usize> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
