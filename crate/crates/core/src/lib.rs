//! Explicit high-probability excess-risk bounds for empirical risk minimization,
//! with simulators and Monte-Carlo validators for the inequalities behind them.

pub mod bounds;
pub mod concentration;
pub mod covering;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod orlicz;
pub mod presets;
pub mod problems;
pub mod quadrature;
pub mod rng;
pub mod serde_ext;
pub mod verify;

pub use error::{Error, Result};
