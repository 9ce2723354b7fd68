//! Start-of-day forecasting of post-surgery recovery-bed occupancy and
//! sequencing of surgical cases to level that occupancy.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: lognormal primitives, moment matching for the
//!   surgery-plus-recovery duration, and the Poisson-binomial CDF.
//! - [`forecast`]: per-patient in-recovery probabilities and the aggregate
//!   occupancy curve with its normal-approximation band.
//! - [`model`]: instances, schedules, feasibility checking and the
//!   maximum-expected-occupancy (MEO) objective.
//! - [`solver`]: the critical-path constructive heuristic and simulated
//!   annealing over patient sequences.
//! - [`simulation`]: a Monte Carlo oracle for the forecast and a synthetic
//!   instance generator.
//! - [`io`]: JSON instance/schedule files and the occupancy CSV.

pub mod distributions;
pub mod error;
pub mod forecast;
pub mod io;
pub mod model;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};
