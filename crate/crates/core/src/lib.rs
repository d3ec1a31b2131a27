//! Panel treatment-effect estimation with cross-fitted double machine
//! learning, proxy-augmented correlated random effects, classical panel
//! baselines and a Monte Carlo harness to compare them.

pub mod cli;
pub mod dml;
pub mod error;
pub mod estimators;
pub mod forest;
pub mod montecarlo;
pub mod numeric;
pub mod panel;

pub use error::{Error, Result};
