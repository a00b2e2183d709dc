use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the stabdep library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vector length {0} exceeds the supported maximum of {max}", max = crate::gf2::MAX_LEN)]
    TooLong(usize),

    #[error("qubit count {0} is outside the supported range 1..={max}", max = crate::MAX_QUBITS)]
    QubitCount(usize),

    #[error("bit pattern {bits:#x} does not fit in {len} bits")]
    BitsOutOfRange { bits: u64, len: usize },

    #[error("linear system is inconsistent")]
    InconsistentSystem,

    #[error("target vector is not in the span of the basis")]
    NotInSpan,

    #[error("bitstring {0} is not in the support of the state")]
    NotInSupport(String),

    #[error("invalid check matrix: {0}")]
    InvalidCheckMatrix(String),

    #[error("state is a computational basis state and cannot be split")]
    ComputationalState,

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: u64, limit: u64 },

    #[error("size guard exceeded: {0}")]
    Guard(String),

    #[error("corrupt cache file: {0}")]
    CorruptCache(String),

    #[error("cache mismatch: {0}")]
    Mismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parse error in {path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
