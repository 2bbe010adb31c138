//! Character-spherical averages on SL2(R).

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod averages;
pub mod cli;
pub mod error;
pub mod group;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod spherical;

pub use error::{Error, Result};
