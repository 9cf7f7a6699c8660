//! Fuzzy-random BN-S stochastic volatility: simulation, futures-data
//! ingestion, big-jump labeling and regime classification.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bns;
pub mod classifier;
pub mod error;
pub mod fuzzy;
pub mod jumplab;
pub mod levy;
pub mod market_data;
pub mod numeric;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
pub use fuzzy::{RiskAttitude, SubtractionMode, Tfn};
pub use par::ExecMode;
pub use rng::RngStream;
