use thiserror::Error;

use crate::vqe::VqeResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FCIDUMP parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("orbital index out of range: {index} not in [1, {norb}] (line {line})")]
    OrbitalIndexOutOfRange { index: usize, norb: usize, line: usize },

    #[error("conflicting duplicate integral {indices:?}: {first} vs {second} (line {line})")]
    ConflictingDuplicate {
        indices: [usize; 4],
        first: f64,
        second: f64,
        line: usize,
    },

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("level shift validation failed: {0}")]
    MuValidation(String),

    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("no restart converged (best energy {:.12} Eh)", .0.energy)]
    NotConverged(Box<VqeResult>),
}
