use thiserror::Error;

/// Errors produced by the CRLB toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (bad parameter values,
    /// incompatible scheme/waveform pairs, missing fields).
    #[error("configuration error: {0}")]
    Config(String),

    /// Sampling rate too low for the requested bandwidth.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// A delayed copy of the signal would fall outside the guard interval.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Mathematical domain violation (zero energy, zero carrier, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical integration or linear algebra failed beyond tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// I/O failure while reading or writing signals / CSV files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed signal file or config file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
