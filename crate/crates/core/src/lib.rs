//! Spectral evaluation of the first-passage distribution of the Generalized
//! Shiryaev-Roberts statistic through a detection threshold, for Brownian
//! motion whose drift changes from 0 to a known `mu`.
//!
//! The statistic obeys `dR = (1 + theta mu^2 R) dt + mu R dB`, with
//! `theta = 0` before the change and `theta = 1` after it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod distribution;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{ModelParams, Spectrum};
