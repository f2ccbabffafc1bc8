use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library.
///
/// Contract violations (dimension mismatches, stepping a finished episode)
/// are programmer errors and panic instead of returning a variant.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value or file.
    #[error("configuration error: {0}")]
    Config(String),

    /// Configuration file error with the offending line number.
    #[error("{path}:{line}: {msg}")]
    ConfigLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A non-finite value appeared during training.
    #[error("training diverged: {0}")]
    Divergence(String),

    /// The simulator failed to reach a steady state within the tick budget.
    #[error("settle did not reach steady state within {max_ticks} ticks")]
    SettleTimeout { max_ticks: u32 },

    /// The replay buffer cannot serve the requested batch yet.
    #[error("replay buffer holds {len} experiences, {requested} requested")]
    InsufficientData { len: usize, requested: usize },

    /// Malformed checkpoint, log, or plot input.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
