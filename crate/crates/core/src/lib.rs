#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod selection;
pub mod spectral;

#[cfg(test)]
mod testdata;

pub use error::{Error, Result};
