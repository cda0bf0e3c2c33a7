//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The workload file could not be read.
    #[error("cannot read workload file '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The workload file is not syntactically valid JSON (or violates the
    /// documented schema). Carries serde's line/column context.
    #[error("parse error in '{path}': {message}")]
    Parse { path: String, message: String },

    /// The workload parsed but violates one or more invariants.
    #[error("invalid workload: {}", violations.join("; "))]
    Validation { violations: Vec<String> },

    /// A performance model could not produce any usable prediction.
    #[error("no usable profiling signal for application '{app_id}'")]
    NoSignal { app_id: String },

    /// Amortization is undefined for a non-positive power delta.
    #[error("no amortization path: power delta {power_delta_w} W is not positive")]
    NoAmortizationPath { power_delta_w: f64 },

    /// A metric was asked to divide by a non-positive baseline.
    #[error("metric domain error: {0}")]
    MetricDomain(String),

    /// The requested policy kind is unknown.
    #[error("unknown policy kind '{0}'")]
    UnknownPolicy(String),

    /// The simulation engine reached a state it must never reach
    /// (infeasible action, missing profile, stuck queue).
    #[error("engine fault: {0}")]
    EngineFault(String),

    /// An oracle plan could not be replayed against the given workload.
    #[error("replay error at event {event_index}: {message}")]
    Replay { event_index: usize, message: String },

    /// A CLI-level configuration problem (bad emit set, unwritable dir, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
