//! Positive weights that turn a total family of vectors into one satisfying
//! the lower frame inequality `||x||^2 <= Σ_k λ_k |<v_k, x>|^2`.
//!
//! The construction runs in stages: the tail-span chain and its adapted
//! orthonormal basis ([`chain`]), approximants of that basis from the tails,
//! a small perturbation `T` and its resolvent, and finally the weights
//! ([`pipeline`]). Every intermediate identity and inequality is re-checked
//! by [`verify`].

pub mod chain;
pub mod cli;
pub mod error;
pub mod family;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod verify;

pub use chain::{build_canonical_basis, compute_tail_chain, CanonicalBasis, TailSpanChain};
pub use error::{Error, Result, Stage};
pub use family::{
    generate_family, load_family, Field, GeneratorKind, GeneratorSpec, TailMode, VectorFamily,
};
pub use pipeline::{
    approximate_basis, build_perturbation, resolve_frame, run_pipeline, scaling_weights,
    ApproximantSet, Method, Mode, PerturbationOperator, PipelineConfig, PipelineRun,
    ScalingCertificate,
};
pub use verify::{Check, VerificationReport};
