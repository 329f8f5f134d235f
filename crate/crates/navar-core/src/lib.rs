//! Neural additive vector autoregression for Granger-causal discovery.
//!
//! Each variable of a multivariate time series gets its own small network
//! that maps the variable's recent past to one contribution per target
//! variable. Predictions are the per-target sums of contributions plus a
//! bias, and the standard deviation of a pair's contribution series over
//! time scores the causal link between the two variables.
//!
//! The crate is `no_std` (alloc required): it contains the numerics, the
//! backbones, training, scoring, and the synthetic benchmark generators.
//! File formats and the command line live in the companion `navar` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backbones;
pub mod data;
pub mod error;
mod mathx;
pub mod model;
pub mod numerics;
pub mod scoring;

pub use error::{Error, Result};
