//! Command-line front end and file formats for generalized ridge regression
//! built on `gridge-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
