use std::io;

use crate::signal::{FilterKind, ModFormat};

/// Errors produced anywhere in the measurement pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,
    #[error("zero-power signal cannot be normalized")]
    ZeroPower,
    #[error("degenerate LFSR seed")]
    DegenerateSeed,
    #[error("roll-off factor {0} outside [0, 1]")]
    InvalidRollOff(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("odd bit count {0}: QPSK needs bit pairs")]
    OddBitCount(usize),
    #[error("OQPSK requires even samples/symbol (got {0})")]
    OqpskOddSps(usize),
    #[error("signal too short: need {needed} samples, have {available}")]
    InsufficientLength { needed: usize, available: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("undefined phase reference")]
    UndefinedPhaseReference,
    #[error("symbol {0} is not a QPSK constellation point")]
    NotOnConstellation(num_complex::Complex64),
    #[error("degenerate PSD: {0}")]
    DegeneratePsd(&'static str),
    #[error("corrupt capture: {0}")]
    CorruptCapture(String),
    #[error("sweep point {format}/{kind}/alpha={alpha} failed: {source}")]
    SweepPoint {
        format: ModFormat,
        kind: FilterKind,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad caller input rather than IO or data damage.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::SweepPoint { source, .. } => source.is_validation(),
            Error::Io(_) | Error::Json(_) | Error::CorruptCapture(_) => false,
            _ => true,
        }
    }

    /// True when stored data failed consistency checks.
    pub fn is_corruption(&self) -> bool {
        match self {
            Error::SweepPoint { source, .. } => source.is_corruption(),
            Error::CorruptCapture(_) => true,
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
