//! Dialog-act classification from prosody and words.
//!
//! The crate covers the whole pipeline: corpus ingestion ([`corpus`]),
//! prosodic feature extraction ([`prosody`]), entropy-based decision trees
//! with cross-validated pruning ([`trees`]), per-tag backoff trigram models
//! with N-best summation ([`lm`]), weighted combination of the two knowledge
//! sources ([`fusion`]) and metrics, significance tests and task drivers
//! ([`eval`]).
//!
//! Numeric kernels in [`numeric`] are generic over [`Scalar`] (`f32` or
//! `f64`); the rest of the pipeline works in `f64` through the aliases below.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod fusion;
pub mod lm;
pub mod numeric;
pub mod prosody;
pub mod scalar;
pub mod trees;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Least-squares line fit in double precision.
pub type LineFit = numeric::LineFit<f64>;
/// Least-squares line fit in single precision.
pub type LineFit32 = numeric::LineFit<f32>;
