//! Optimizers: gradient descent, mini-batch SGD/AdaGrad, the simplified and
//! full SVRG methods, and a restart driver for gradient-dominated objectives.

mod baselines;
mod rate;
mod restart;
mod run;
mod schedule;
mod svrg;

pub use baselines::{gd_run, gd_run_observed, sgd_run, sgd_run_observed, GdConfig, SgdConfig};
pub use rate::{adagrad_step, AdaGradState, LearningRate, ADAGRAD_DELTA};
pub use restart::{epochs_per_round, grad_dominated_drive, DriveResult};
pub use run::{IterateEvent, NoObserver, Observer, RunResult, DIVERGENCE_FACTOR};
pub use schedule::{beta_weights, epoch_end_weights, min_sub_epoch, EndWeights, SvrgSchedule};
pub use svrg::{
    svrg_estimator, svrg_full_run, svrg_full_run_observed, svrg_simple_run, svrg_simple_run_observed, OutputRule,
    SnapshotMode, SvrgConfig,
};
