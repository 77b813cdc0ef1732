// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature constants are tabulated to more digits than f64 holds.
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod functions;
pub mod kernel;
pub mod moments;
pub mod quadrature;
pub mod special;
pub mod study;

pub use error::{Error, Result};
