//! Scale-steerable tight wavelet frames.
//!
//! A Meyer-type isotropic tight frame is extended by an admissible family
//! of radial trigonometric Fourier multipliers. Because the span of the
//! family is invariant under dilation, coefficients for any continuous
//! rescaling of the multipliers follow from the computed ones by a small
//! matrix product. On top of this sit a spot detector, a synthetic-data
//! generator and an evaluation kit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod detector;
pub mod error;
pub mod evalkit;
pub mod fft;
pub mod frame;
pub mod io;
pub mod multipliers;
pub mod par;
pub mod simdata;

pub use error::{Error, Result};
