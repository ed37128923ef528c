use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration data.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no SINR requirement for scenario {scenario}, profile {profile}, channel {channel}")]
    MissingSinr {
        scenario: String,
        profile: String,
        channel: String,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Every problem found while loading a bundle, in discovery order.
    #[error("bundle has {} problem(s):\n  {}", .0.len(), .0.join("\n  "))]
    Bundle(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report format: {0}")]
    Report(String),
}
