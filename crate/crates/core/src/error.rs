use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} coincides with a nucleus at half-separation R = {half_separation}")]
    SingularPoint {
        point: [f64; 3],
        half_separation: f64,
    },

    #[error("{op} is undefined at {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("collocation batch is empty")]
    EmptyBatch,

    #[error("tape output node has {len} elements; backward needs a scalar")]
    NotScalar { len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at epoch {epoch} ({phase})")]
    NonFiniteLoss { epoch: usize, phase: String },

    #[error("non-finite gradient component at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("eigensolver did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("checkpoint format_version {found} is not supported (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("checkpoint parameter '{0}' is missing or has the wrong length")]
    ParameterShape(String),

    #[error("{}", range_message(*.value, *.min, *.max))]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("no R value of {left} matches any R value of {right}")]
    DisjointGrids { left: String, right: String },

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end: 1 for usage or
    /// configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteLoss { .. }
            | Error::NonFiniteGradient { .. }
            | Error::NonConvergence { .. }
            | Error::SingularPoint { .. }
            | Error::Domain { .. } => 2,
            _ => 1,
        }
    }
}

fn range_message(value: f64, min: f64, max: f64) -> String {
    if min == 0.0 && max == f64::INFINITY {
        format!("R = {value} must be positive")
    } else {
        format!("R = {value} is outside the valid range [{min}, {max}]")
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
