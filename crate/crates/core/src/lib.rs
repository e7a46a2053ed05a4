//! Frequency-domain stability certificates and time-domain simulation for
//! Lurye feedback loops with monotone or slope-restricted nonlinearities.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod exec;
pub mod lti;
pub mod multipliers;
pub mod sim;

pub use error::{Error, Result};
