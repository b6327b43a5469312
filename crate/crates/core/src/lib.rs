//! Simulation and analytic oracles for variance and autocorrelation scaling
//! laws of linear stochastic (partial) differential equations driven by red
//! (Ornstein–Uhlenbeck) noise.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
#[cfg(feature = "runner")]
pub mod experiment;
pub mod grid;
pub mod noise;
pub mod oracle;
pub mod probes;
pub mod quadrature;
pub mod stats;
pub mod sweep;
pub mod systems;

pub use error::{EwsError, Result};
