//! Experiment harness around `svrg-core`: configured training runs, tuning
//! grids, a verification gate and dataset utilities.

pub mod config;
pub mod error;
pub mod problem;
pub mod run;
pub mod train;
pub mod tune;
pub mod verify_suite;

pub use config::RunConfig;
pub use error::{BenchError, BenchResult};
