//! Stochastic variance-reduced gradient methods for non-convex finite sums.
//!
//! The crate provides finite-sum objectives (regularized linear ERM with
//! several margin losses, a two-layer softplus network), the simplified and
//! full SVRG methods with their epoch schedules, GD/SGD/AdaGrad baselines,
//! LibSVM and trace-CSV I/O, and numerical oracles for checking gradients,
//! estimator variance and convergence rates.
//!
//! Component indices are 0-based throughout the API; LibSVM feature indices
//! are 1-based on disk and converted when parsed.

pub mod data;
pub mod error;
pub mod linalg;
pub mod losses;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{ParamVec, SparseVec};
