//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by tensor math, model surgery, probing and the pipeline.
#[derive(Debug, Error)]
pub enum MippError {
    /// Operand shapes do not compose.
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// Training produced a non-finite loss.
    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Divergence { iteration: usize, loss: f32 },

    /// An operation needs more samples than were provided.
    #[error("{op} needs at least {needed} samples, got {got}")]
    InsufficientSamples {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    /// Dropping every input column leaves nothing to refit against.
    #[error("degenerate drop: all {total} input columns were dropped; use the null predictor instead")]
    DegenerateDrop { total: usize },

    /// An invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),

    /// Dataset or artifact files could not be read.
    #[error("failed to read {path}: {source}")]
    Ingestion {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A binary artifact did not match its documented layout.
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MippError>;
