//! Grouped fixed-effects panel estimation with time-varying group
//! heterogeneity, the Monte Carlo machinery used to validate it, and a
//! present-biased structural model of risky choice estimated by simulated
//! method of moments.

pub mod behavioral;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod panel;
pub mod simulation;
pub mod smm;

pub use error::{Error, Result};
