// Negated float comparisons below deliberately treat NaN as failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle_dist;
pub mod eigen;
pub mod flow;
pub mod error;
pub mod experiments;
pub mod measure;
pub mod parse;
pub mod polynomial;
pub mod powersum;
pub mod rootfind;

pub use error::{Error, Result};
