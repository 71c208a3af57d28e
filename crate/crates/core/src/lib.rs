//! Precise-rate asymptotics for the law of the iterated logarithm.
//!
//! * [`analytic`]: normal and Brownian-supremum tails, gamma and alternating
//!   power series.
//! * [`constants`]: closed-form limit constants of the normalized series.
//! * [`series`]: certified evaluation of the weighted tail series.
//! * [`lab`]: Monte Carlo walks, empirical series and moment diagnostics.

pub mod analytic;
pub mod constants;
pub mod error;
pub mod lab;
pub mod quadrature;
pub mod series;

#[cfg(test)]
mod tests;

pub use analytic::{Statistic, TailModel};
pub use constants::{limit_constant, DriftLimit, Regime, WeightExponents};
pub use error::{Error, Result};
pub use series::{evaluate_series, normalized_value, DriftSchedule, SeriesOptions, SeriesResult, SeriesSpec};
