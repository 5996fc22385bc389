use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("indicator vector must contain at least one probability")]
    EmptyParams,

    #[error("probability #{index} = {value} is outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance too large: n = {n} exceeds the limit {max}")]
    InstanceTooLarge { n: usize, max: usize },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("log-quotient {log_quotient} at m = {m} exceeds the overflow limit")]
    Overflow { m: usize, log_quotient: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by a numerical routine failing to converge or
    /// overflowing, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Overflow { .. })
    }
}
