//! Capacity planning for large-scale LoRa networks.
//!
//! Closed-form interference statistics and packet success probabilities,
//! max-min fair SF/duty-cycle/power allocation and a Poisson-rain
//! Monte-Carlo simulator to cross-check every formula.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod phy;
pub mod metrics;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
