//! Numerical laboratory for disordered pinning models at the critical
//! temperature window.

// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod cache;
pub mod coarse_grain;
pub mod continuum;
pub mod dickman;
pub mod disorder;
pub mod ensemble;
pub mod error;
pub mod interp;
pub mod partition;
pub mod quad;
pub mod rng;
pub mod she;
pub mod special;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
