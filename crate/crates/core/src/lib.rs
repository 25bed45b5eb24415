//! Robust index assignment for discrete RIS phase-shift codebooks.
//!
//! Codewords are labelled so that single-bit feedback errors map to
//! configurations with small SNR loss. The labelling is derived from a short
//! open Hamiltonian path over the pairwise mismatch-loss matrix, Gray-coded
//! along the path.

pub mod assignment;
pub mod baseline;
pub mod bench;
pub mod codebook;
pub mod error;
pub mod loss;
pub mod numfmt;
pub mod perm;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
