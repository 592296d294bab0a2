//! Fixed-point toolkit for ordered partial metric spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod engine;
pub mod error;
pub mod hausdorff;
pub mod ifs;
pub mod integral;
pub mod metric;
pub mod point;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};
pub use point::Point;
