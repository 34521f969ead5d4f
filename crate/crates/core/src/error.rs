use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage a failure originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    TailChain,
    CanonicalBasis,
    Approximation,
    Perturbation,
    Resolvent,
    Weights,
    Verification,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::TailChain => "tail-chain",
            Stage::CanonicalBasis => "canonical-basis",
            Stage::Approximation => "approximation",
            Stage::Perturbation => "perturbation",
            Stage::Resolvent => "resolvent",
            Stage::Weights => "weights",
            Stage::Verification => "verification",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("family is not total: rank {rank} < dimension {dim}")]
    NotTotal { rank: usize, dim: usize },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("dimension mismatch: vector {index} has {found} entries, expected {expected}")]
    DimensionMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },

    #[error("non-finite entry in vector {index}, component {component}")]
    NonFinite { index: usize, component: usize },

    #[error("empty family: at least one vector is required")]
    EmptyFamily,

    #[error("cannot approximate u_{n}: residual {residual:e} is not below {bound:e}")]
    Approximation { n: usize, residual: f64, bound: f64 },

    #[error("I - T is not certified invertible: ||T|| = {norm}")]
    NotInvertible { norm: f64 },

    #[error("lambda_{k} overflows binary64; use the log2 column instead")]
    Overflow { k: usize },

    #[error("degenerate frame operator: smallest eigenvalue {0:e}")]
    Degenerate(f64),

    #[error("chain too long: 2M = {len} exceeds the supported {max}")]
    ChainTooLong { len: usize, max: usize },

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// Innermost error, with any stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
