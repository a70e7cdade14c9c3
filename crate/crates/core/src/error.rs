use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("invalid region specification `{token}`: {reason}")]
    RegionSpec { token: String, reason: String },

    #[error("point ({}, {}, {}) lies outside the region", .0.x, .0.y, .0.z)]
    OutsideRegion(Point3),

    #[error("rejection sampling gave up after {0} attempts")]
    SamplingExhausted(usize),

    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        allowed: String,
    },

    #[error("need at least {needed} points, sample has {actual}")]
    TooFewPoints { needed: usize, actual: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    /// The requested radius is outside the asymptotic regime the estimator
    /// assumes (it exceeds the inradius of the region).
    #[error("regime violated: r_n = {radius} exceeds the region inradius {inradius}")]
    Regime { radius: f64, inradius: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trial {index} failed: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
