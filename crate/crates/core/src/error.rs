//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file could not be read.
    #[error("cannot read config file `{path}`: {source}")]
    ConfigIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A configuration line could not be parsed.
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// A parameter violates a physical or numerical invariant.
    #[error("invalid value for `{key}`: {message}")]
    InvalidParam { key: String, message: String },

    /// The integrator produced a non-finite state.
    #[error("integration blew up at t = {t:.6} s (non-finite state)")]
    Blowup { t: f64 },

    /// The controller produced a non-finite gain or voltage.
    #[error("controller diverged at tick {tick} (non-finite gain or voltage)")]
    ControllerDiverged { tick: u64 },

    /// A network was fed an input of the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An output file could not be written.
    #[error("cannot write `{path}`: {source}")]
    OutputIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A malformed trace file was read back.
    #[error("bad trace data: {0}")]
    BadTrace(String),

    /// An experiment specification is invalid.
    #[error("invalid spec: {0}")]
    BadSpec(String),

    /// An API called out of order (e.g. backward before forward).
    #[error("{0}")]
    Usage(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
