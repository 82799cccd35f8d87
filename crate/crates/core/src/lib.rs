//! Local explanation vectors for individual classification decisions.
//!
//! An explanation vector is the gradient of a class-probability function at
//! a query point. Two routes are provided:
//!
//! * [`gpc`]: binary Gaussian process classification fitted by expectation
//!   propagation, with the closed-form gradient of the predictive probability.
//! * [`mimic`]: a Parzen-window classifier fitted to the labels of an
//!   arbitrary classifier, whose posterior has a closed-form gradient. Works
//!   for anything that only produces labels (k-NN, an external SVM, ...).
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live
//! in the companion `gradxplain` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod classifiers;
pub mod data;
mod error;
pub mod explanation;
pub mod gpc;
pub mod kernels;
pub mod linalg;
pub mod mimic;
pub mod special;

pub use error::{Error, Result};
pub use explanation::{ExplanationSource, ExplanationVector};
pub use kernels::{KernelKind, KernelSpec};

/// Class label. Binary GP classification uses `-1` / `+1`; everything else
/// accepts arbitrary integer class ids.
pub type Label = i64;
