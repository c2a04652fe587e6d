//! Finite-scale orthogonality statistics for bounded arithmetic functions.
//!
//! The crate computes checkable finite-`N` surrogates of statements about
//! sequences such as the Möbius and Liouville functions: cylinder-set
//! cancellation, short-interval variance, Wiener atoms, averaged Chowla
//! correlations, Gowers–Host–Kra uniformity norms and block-wise exponential
//! sum maxima. It also ships two constructive procedures: a positive-correlation
//! coupling of a finite-state Markov chain with a Bernoulli process, and a
//! sampler for a Cantor measure that is rigid in measure but not almost
//! everywhere.
//!
//! Sequences are one-sided: a [`SequenceSample`] holds `u(1..=N)`.

pub mod averaging;
pub mod cli;
pub mod correlate;
pub mod coupling;
pub mod cylinders;
pub mod error;
pub mod momo;
pub mod oracle;
pub mod rigidity;
pub mod seqgen;
pub mod spectral;
pub mod suite;
pub mod uniformity;

pub use averaging::{AveragingMode, AveragingScheme, ConvergenceReport};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use seqgen::SequenceSample;

/// Library version embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
