// `!(x > 0.0)` deliberately treats NaN as invalid.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod reference;
pub mod solve;
pub mod spatial;
pub mod weights;

pub use error::{Error, Result};
