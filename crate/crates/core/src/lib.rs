//! Core algorithms for generating random bits from the quadrature noise of a
//! single-mode thermal state.
//!
//! The chain is: [`source_sim`] produces homodyne quadrature samples,
//! [`acquisition`] digitizes them, [`analysis`] characterizes the raw codes
//! (min-entropy, shot-noise calibration, Gaussianity, autocorrelation),
//! [`extractor`] compresses them with Toeplitz hashing and [`stattests`]
//! validates the output bits.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and the
//! command-line frontend live in the `thermrng` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod acquisition;
pub mod analysis;
pub mod bits;
mod error;
pub mod extractor;
pub mod fft;
pub mod source_sim;
pub mod special;
pub mod stattests;

pub use error::{Error, Result};
