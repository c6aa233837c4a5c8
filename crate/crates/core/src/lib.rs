#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discretize;
pub mod error;
pub mod family;
pub mod index;
pub mod numerics;
pub mod sflow;
pub mod theorems;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
