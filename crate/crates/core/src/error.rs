use std::fmt;

use thiserror::Error;

/// Which factor of a CUR factorization an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    C,
    R,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::C => f.write_str("C"),
            Factor::R => f.write_str("R"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CurError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported Matrix Market file: {0}")]
    Unsupported(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{rows}x{cols} matrix exceeds the dense size cap of {cap} entries")]
    SizeCapExceeded { rows: usize, cols: usize, cap: usize },

    #[error("singular interpolation system at DEIM step {step}")]
    SingularInterpolation { step: usize },

    #[error("factor {factor} is rank deficient (numerical rank {rank} < {expected})")]
    RankDeficient {
        factor: Factor,
        rank: usize,
        expected: usize,
    },

    #[error("column {column} lies numerically in the span of the current basis")]
    ColumnInSpan { column: usize },

    #[error("input is not orthonormal (column norm deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("only {available} indices carry positive probability, {requested} requested")]
    InsufficientSupport { requested: usize, available: usize },

    #[error("{which} is singular; the error bound does not apply")]
    SingularSelection { which: &'static str },

    #[error("duplicate index {index} selected (internal consistency failure)")]
    DuplicateIndex { index: usize },

    #[error("SVD did not converge: {0}")]
    NotConverged(String),
}

/// Broad class of a failure, used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Ingestion,
    Numerical,
}

impl CurError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CurError::Io(_) | CurError::Parse { .. } | CurError::Unsupported(_) => {
                ErrorClass::Ingestion
            }
            CurError::DimensionMismatch { .. }
            | CurError::InvalidArgument(_)
            | CurError::SizeCapExceeded { .. }
            | CurError::NotOrthonormal { .. }
            | CurError::InsufficientSupport { .. } => ErrorClass::Validation,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, CurError>;
