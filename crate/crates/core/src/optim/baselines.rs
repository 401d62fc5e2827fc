use std::ops::ControlFlow;

use super::rate::{LearningRate, Stepper};
use super::run::{guard_step, IterateEvent, NoObserver, Observer, RunResult, Tracker};
use super::svrg::OutputRule;
use crate::error::{invalid, Error, Result};
use crate::linalg::ParamVec;
use crate::objectives::FiniteSum;
use crate::rng::{BatchSampler, RandomSource, Reservoir};

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub steps: usize,
    /// Step length; `1/L` when absent.
    pub step: Option<f64>,
    pub max_passes: Option<f64>,
    pub wall_clock: bool,
}

impl GdConfig {
    pub fn new(steps: usize) -> Self {
        GdConfig { steps, step: None, max_passes: None, wall_clock: false }
    }
}

/// Full-gradient descent. Every step costs one pass and is traced.
pub fn gd_run<F: FiniteSum + ?Sized>(obj: &F, x_start: &ParamVec, config: &GdConfig) -> Result<RunResult> {
    gd_run_observed(obj, x_start, config, &mut NoObserver)
}

pub fn gd_run_observed<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    config: &GdConfig,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    let n = obj.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if x_start.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x_start.len() });
    }
    let eta = match config.step {
        Some(eta) => eta,
        None => {
            let l = obj.smoothness();
            if !(l > 0.0 && l.is_finite()) {
                return invalid(format!("gradient descent needs a positive smoothness constant, got {l}"));
            }
            1.0 / l
        }
    };
    let mut stepper = Stepper::new(LearningRate::Constant(eta), obj.dim(), n)?;
    let mut tracker = Tracker::new(n, config.wall_clock);
    let budget = config.max_passes.map(|p| (p * n as f64).round() as u64);
    let mut x = x_start.clone();
    let mut evals = 0u64;
    for k in 0..=config.steps {
        let (value, mut g) = obj.value_and_gradient(x.as_slice());
        let rec = tracker.record(evals, value, &g, k as u64)?;
        let event = IterateEvent { epoch: k, t: 0, x: x.as_slice(), eligible: true, grad_evals: evals };
        if observer.checkpoint(&rec, x.as_slice()).is_break() || observer.iterate(&event).is_break() {
            break;
        }
        if k == config.steps || budget.is_some_and(|bud| evals + n as u64 > bud) {
            break;
        }
        evals += n as u64;
        let res = stepper.apply(&mut x, &mut g, k as u64);
        guard_step(&mut tracker, evals, res)?;
    }
    Ok(RunResult { output: x.clone(), last: x, trace: tracker.trace, grad_evals: evals, seed: 0, epoch_lengths: Vec::new() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub iterations: u64,
    pub batch: usize,
    pub lr: LearningRate,
    pub output: OutputRule,
    /// Iterations between trace rows; one pass worth (`ceil(n/b)`) when absent.
    pub checkpoint_every: Option<u64>,
    pub max_passes: Option<f64>,
    pub wall_clock: bool,
}

impl SgdConfig {
    pub fn new(iterations: u64, lr: LearningRate) -> Self {
        SgdConfig {
            iterations,
            batch: 1,
            lr,
            output: OutputRule::Last,
            checkpoint_every: None,
            max_passes: None,
            wall_clock: false,
        }
    }
}

/// Mini-batch SGD; with an AdaGrad rate this is AdaGrad. Each iteration costs `b` evaluations.
pub fn sgd_run<F: FiniteSum + ?Sized>(obj: &F, x_start: &ParamVec, config: &SgdConfig, rng: &mut RandomSource) -> Result<RunResult> {
    sgd_run_observed(obj, x_start, config, rng, &mut NoObserver)
}

pub fn sgd_run_observed<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    config: &SgdConfig,
    rng: &mut RandomSource,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    let n = obj.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if x_start.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x_start.len() });
    }
    if config.iterations == 0 {
        return invalid("need at least one iteration");
    }
    let b = config.batch;
    if b == 0 || b > n {
        return invalid(format!("batch size {b} outside 1..={n}"));
    }
    let every = config.checkpoint_every.unwrap_or(n.div_ceil(b) as u64).max(1);
    let budget = config.max_passes.map(|p| (p * n as f64).round() as u64);
    let mut stepper = Stepper::new(config.lr, obj.dim(), n)?;
    let mut tracker = Tracker::new(n, config.wall_clock);
    let mut sampler = BatchSampler::new(n);
    let mut reservoir: Reservoir<ParamVec> = Reservoir::new();
    let mut x = x_start.clone();
    let mut g = vec![0.0; obj.dim()];
    let mut evals = 0u64;
    let inv = 1.0 / b as f64;

    let rec = tracker.record_at(obj, x.as_slice(), 0, 0)?;
    let mut stopped = observer.checkpoint(&rec, x.as_slice()).is_break();
    let mut k = 0u64;
    while !stopped && k < config.iterations {
        if budget.is_some_and(|bud| evals + b as u64 > bud) {
            break;
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        obj.add_batch_gradient(sampler.draw(rng, b), x.as_slice(), inv, &mut g);
        evals += b as u64;
        let res = stepper.apply(&mut x, &mut g, k);
        guard_step(&mut tracker, evals, res)?;
        k += 1;
        if config.output == OutputRule::Random {
            reservoir.offer_with(rng, || x.clone());
        }
        let event = IterateEvent { epoch: 0, t: k as usize, x: x.as_slice(), eligible: true, grad_evals: evals };
        if observer.iterate(&event) == ControlFlow::Break(()) {
            stopped = true;
        }
        if k % every == 0 || k == config.iterations || stopped {
            let rec = tracker.record_at(obj, x.as_slice(), evals, k / every)?;
            if observer.checkpoint(&rec, x.as_slice()).is_break() {
                stopped = true;
            }
        }
    }
    if tracker.trace.last().is_some_and(|r| r.passes < tracker.passes(evals)) {
        tracker.record_at(obj, x.as_slice(), evals, k / every)?;
    }
    let output = match config.output {
        OutputRule::Last => x.clone(),
        OutputRule::Random => reservoir.into_item().unwrap_or_else(|| x.clone()),
    };
    Ok(RunResult { output, last: x, trace: tracker.trace, grad_evals: evals, seed: rng.seed(), epoch_lengths: Vec::new() })
}
