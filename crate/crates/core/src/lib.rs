//! Variance-optimal hedging laboratory for the lognormal SABR and rough
//! Bergomi models.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bs;
pub mod config;
pub mod error;
pub mod hedging;
pub mod model;
pub mod dynamics;
pub mod smile;
pub mod sweep;

pub use error::{HedgeError, Result};
pub use model::{ModelFamily, ModelParams, OptionSpec};
