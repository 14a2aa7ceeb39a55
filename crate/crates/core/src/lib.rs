//! Toolkit for decoding short BCH codes with redundant, cycle-optimized
//! parity-check matrices.
//!
//! The pipeline has three legs:
//!
//! 1. [`pcmopt`] turns the standard staircase parity-check matrix of a BCH
//!    code into a redundant low-density matrix with few length-4 cycles and
//!    near-uniform column weights.
//! 2. [`nms`] runs normalized min-sum decoding on that matrix, plain or
//!    dilated across the code's automorphism group, and [`osd`] provides
//!    ordered-statistics decoding as a fallback; [`hybrid`] chains the two.
//! 3. [`sim`] measures frame/bit error rates over a BPSK/AWGN channel with
//!    reproducible, worker-count-independent Monte-Carlo sweeps.
//!
//! Binary linear algebra lives in [`gf2`], code construction (fields,
//! polynomials, automorphisms) in [`bch`], and matrix file formats in [`io`].

pub mod bch;
pub mod gf2;
pub mod hybrid;
pub mod io;
pub mod nms;
pub mod osd;
pub mod pcmopt;
pub mod sim;

pub use bch::CodeSpec;
pub use gf2::{BitMatrix, BitVector, WeightProfile};
pub use pcmopt::OptimizedPcm;

/// Errors shared across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported parameters: {0}")]
    Parameter(String),
    #[error("candidate pool too small: need {needed} more padding rows, only {available} distinct rows available")]
    PoolExhausted { needed: usize, available: usize },
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
