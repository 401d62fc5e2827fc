use std::ops::ControlFlow;
use std::time::Instant;

use crate::data::TraceRecord;
use crate::error::{Divergence, Error, Result};
use crate::linalg::{sq_norm_slice, ParamVec};
use crate::objectives::FiniteSum;

/// Objective growth beyond this factor of the starting value counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// The iterate the method returns (random eligible iterate or last, per config).
    pub output: ParamVec,
    /// Final iterate of the run.
    pub last: ParamVec,
    pub trace: Vec<TraceRecord>,
    /// Component-gradient evaluations spent by the optimizer.
    pub grad_evals: u64,
    pub seed: u64,
    /// Inner iterations executed in each epoch (SVRG only).
    pub epoch_lengths: Vec<usize>,
}

/// An iterate visited by a run, as seen by an [`Observer`].
#[derive(Debug, Clone, Copy)]
pub struct IterateEvent<'a> {
    pub epoch: usize,
    /// Position inside the epoch; `x` is `x_t`.
    pub t: usize,
    pub x: &'a [f64],
    /// Whether the iterate is a candidate for the returned output.
    pub eligible: bool,
    /// Evaluations spent to reach `x`.
    pub grad_evals: u64,
}

/// Hooks into a running optimizer. Returning `Break` ends the run early.
pub trait Observer {
    fn iterate(&mut self, _event: &IterateEvent<'_>) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn checkpoint(&mut self, _record: &TraceRecord, _x: &[f64]) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

/// Observer that never intervenes.
pub struct NoObserver;

impl Observer for NoObserver {}

/// Builds the trace and watches for divergence.
pub(crate) struct Tracker {
    n: f64,
    clock: Option<Instant>,
    initial: Option<f64>,
    pub(crate) trace: Vec<TraceRecord>,
}

impl Tracker {
    pub(crate) fn new(n: usize, wall_clock: bool) -> Self {
        Tracker { n: n as f64, clock: wall_clock.then(Instant::now), initial: None, trace: Vec::new() }
    }

    pub(crate) fn passes(&self, evals: u64) -> f64 {
        evals as f64 / self.n
    }

    pub(crate) fn diverged(&mut self, evals: u64, objective: f64, grad_norm_sq: f64) -> Error {
        Error::Diverged(Box::new(Divergence {
            passes: self.passes(evals),
            objective,
            grad_norm_sq,
            trace: std::mem::take(&mut self.trace),
        }))
    }

    /// Appends a checkpoint with already-known value and gradient.
    pub(crate) fn record(&mut self, evals: u64, value: f64, grad: &[f64], epoch: u64) -> Result<TraceRecord> {
        let grad_norm_sq = sq_norm_slice(grad);
        let base = *self.initial.get_or_insert(value);
        let blown = !value.is_finite()
            || !grad_norm_sq.is_finite()
            || (base.is_finite() && value > DIVERGENCE_FACTOR * base.abs().max(1.0));
        if blown {
            return Err(self.diverged(evals, value, grad_norm_sq));
        }
        let wall_seconds = self.clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
        let rec = TraceRecord { passes: self.passes(evals), objective: value, grad_norm_sq, wall_seconds, epoch };
        self.trace.push(rec);
        Ok(rec)
    }

    /// Evaluates the full objective at `x` for the trace; not charged to the run.
    pub(crate) fn record_at<F: FiniteSum + ?Sized>(&mut self, obj: &F, x: &[f64], evals: u64, epoch: u64) -> Result<TraceRecord> {
        let (value, grad) = obj.value_and_gradient(x);
        self.record(evals, value, &grad, epoch)
    }
}

/// Maps a non-finite update into a divergence error carrying the trace so far.
pub(crate) fn guard_step(tracker: &mut Tracker, evals: u64, res: Result<()>) -> Result<()> {
    match res {
        Err(Error::NonFinite(_)) => Err(tracker.diverged(evals, f64::NAN, f64::NAN)),
        other => other,
    }
}
