//! Analytic and simulated return distributions of a weekly mean-reversion
//! strategy under an Ornstein-Uhlenbeck price model, with a calibrator and a
//! trailing-stop / profit-call backtester.

pub mod backtest;
pub mod calibrate;
pub mod cli;
pub mod error;
pub mod io;
pub mod params;
pub mod quad;
pub mod simulate;
pub mod stats;
pub mod stopped_max;
pub mod synthetic;

pub use error::{Error, Result};
pub use params::{OUParams, PIP};
pub use stopped_max::{ReturnDistribution, StoppedMaxProblem};
