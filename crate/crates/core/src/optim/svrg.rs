use super::rate::{LearningRate, Stepper};
use super::run::{guard_step, IterateEvent, NoObserver, Observer, RunResult, Tracker};
use super::schedule::SvrgSchedule;
use crate::error::{invalid, Error, Result};
use crate::linalg::ParamVec;
use crate::objectives::{build_snapshot, FiniteSum, SnapshotCache};
use crate::rng::{BatchSampler, RandomSource, Reservoir};

/// How component gradients at the snapshot are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotMode {
    /// Cache when the objective supports it, otherwise recompute.
    #[default]
    Auto,
    /// Rebuild them from residuals stored with the full gradient; an error
    /// if the objective has no such cache. An inner step costs `b` evaluations.
    Stored,
    /// Recompute them at every step; an inner step costs `2b` evaluations.
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputRule {
    /// Uniformly random eligible iterate.
    #[default]
    Random,
    Last,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrgConfig {
    pub epochs: usize,
    pub batch: usize,
    pub snapshot: SnapshotMode,
    pub output: OutputRule,
    /// Overrides the schedule's constant step.
    pub lr: Option<LearningRate>,
    /// Stop once this many passes have been spent.
    pub max_passes: Option<f64>,
    /// For the full method, skip the inner iterations after the sampled epoch
    /// end. They cannot influence the next epoch or the output.
    pub truncate_epochs: bool,
    /// Fill `wall_seconds` in the trace (otherwise 0, keeping traces reproducible).
    pub wall_clock: bool,
}

impl SvrgConfig {
    pub fn new(epochs: usize) -> Self {
        SvrgConfig {
            epochs,
            batch: 1,
            snapshot: SnapshotMode::Auto,
            output: OutputRule::Random,
            lr: None,
            max_passes: None,
            truncate_epochs: true,
            wall_clock: false,
        }
    }
}

/// `mu + (1/|B|) Σ_{i in B} (grad f_i(x) - grad f_i(snapshot))`.
pub fn svrg_estimator<F: FiniteSum + ?Sized>(obj: &F, cache: &SnapshotCache, x: &ParamVec, batch: &[usize]) -> Result<ParamVec> {
    if batch.is_empty() {
        return invalid("estimator needs a non-empty batch");
    }
    if x.len() != obj.dim() || cache.point.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x.len() });
    }
    if let Some(&i) = batch.iter().find(|&&i| i >= obj.len()) {
        return Err(Error::IndexOutOfRange { index: i, len: obj.len() });
    }
    let mut g = cache.gradient.as_slice().to_vec();
    add_correction(obj, cache, x.as_slice(), batch, &mut g);
    ParamVec::new(g)
}

fn add_correction<F: FiniteSum + ?Sized>(obj: &F, cache: &SnapshotCache, x: &[f64], batch: &[usize], g: &mut [f64]) {
    let inv = 1.0 / batch.len() as f64;
    obj.add_batch_gradient(batch, x, inv, g);
    obj.add_snapshot_batch_gradient(batch, cache, -inv, g);
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Simple,
    Full,
}

/// Simplified SVRG: each epoch starts from the previous epoch's last iterate;
/// the output is uniform over all post-step iterates `x_k^s`, `k = 1..m`.
pub fn svrg_simple_run<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    schedule: &SvrgSchedule,
    config: &SvrgConfig,
    rng: &mut RandomSource,
) -> Result<RunResult> {
    run_engine(obj, x_start, schedule, config, rng, Variant::Simple, &mut NoObserver)
}

/// Full SVRG: the epoch ends at a random `m^s` drawn from the end weights,
/// the next epoch starts at `x_{m^s}`, and the output is uniform over all
/// `x_{t-1}^s` with `t <= m^s`, pooled across epochs.
pub fn svrg_full_run<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    schedule: &SvrgSchedule,
    config: &SvrgConfig,
    rng: &mut RandomSource,
) -> Result<RunResult> {
    run_engine(obj, x_start, schedule, config, rng, Variant::Full, &mut NoObserver)
}

pub fn svrg_simple_run_observed<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    schedule: &SvrgSchedule,
    config: &SvrgConfig,
    rng: &mut RandomSource,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    run_engine(obj, x_start, schedule, config, rng, Variant::Simple, observer)
}

pub fn svrg_full_run_observed<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    schedule: &SvrgSchedule,
    config: &SvrgConfig,
    rng: &mut RandomSource,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    run_engine(obj, x_start, schedule, config, rng, Variant::Full, observer)
}

fn run_engine<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    schedule: &SvrgSchedule,
    config: &SvrgConfig,
    rng: &mut RandomSource,
    variant: Variant,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    let n = obj.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if x_start.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x_start.len() });
    }
    if config.epochs == 0 {
        return invalid("need at least one epoch");
    }
    if config.batch == 0 || config.batch > n {
        return invalid(format!("batch size {} outside 1..={n}", config.batch));
    }
    if schedule.m == 0 || schedule.m0 == 0 || schedule.d_sub * schedule.m0 != schedule.m {
        return invalid("schedule needs m = d_sub * m0 with positive parts");
    }
    let lr = config.lr.unwrap_or(LearningRate::Constant(schedule.eta));
    let mut stepper = Stepper::new(lr, obj.dim(), n)?;
    let keep_residuals = config.snapshot != SnapshotMode::Recompute;
    let budget = config.max_passes.map(|p| (p * n as f64).round() as u64);
    let b = config.batch;
    let m = schedule.m;

    let mut tracker = Tracker::new(n, config.wall_clock);
    let mut sampler = BatchSampler::new(n);
    let mut reservoir: Reservoir<ParamVec> = Reservoir::new();
    let mut x = x_start.clone();
    let mut evals: u64 = 0;
    let mut k: u64 = 0;
    let mut epoch_lengths = Vec::with_capacity(config.epochs);
    let mut g = vec![0.0; obj.dim()];
    let mut stopped = false;
    let mut epochs_done = 0usize;

    'epochs: for s in 0..config.epochs {
        if budget.is_some_and(|bud| evals + n as u64 > bud) {
            break;
        }
        let snap = match build_snapshot(obj, &x, keep_residuals) {
            Ok(c) => c,
            Err(Error::NonFinite(_)) => return Err(tracker.diverged(evals, f64::NAN, f64::NAN)),
            Err(e) => return Err(e),
        };
        if config.snapshot == SnapshotMode::Stored && !snap.is_cached() {
            return invalid("this objective cannot cache snapshot gradients; use recompute mode");
        }
        let rec = tracker.record(evals, snap.value, snap.gradient.as_slice(), s as u64)?;
        if observer.checkpoint(&rec, x.as_slice()).is_break() {
            stopped = true;
            epochs_done = s;
            break;
        }
        evals += n as u64;
        let step_cost = (if snap.is_cached() { b } else { 2 * b }) as u64;

        let end = match variant {
            Variant::Simple => m,
            Variant::Full => m - rng.weighted_index(&schedule.end.probabilities)?,
        };
        let steps = if variant == Variant::Full && config.truncate_epochs { end } else { m };
        let mut next_start: Option<ParamVec> = None;
        let mut taken = 0usize;

        for t in 0..=steps {
            let eligible = match variant {
                Variant::Simple => t >= 1,
                Variant::Full => t < end,
            };
            if eligible && config.output == OutputRule::Random {
                reservoir.offer_with(rng, || x.clone());
            }
            let event = IterateEvent { epoch: s, t, x: x.as_slice(), eligible, grad_evals: evals };
            if observer.iterate(&event).is_break() {
                stopped = true;
            }
            if variant == Variant::Full && t == end && !config.truncate_epochs {
                next_start = Some(x.clone());
            }
            if stopped || t == steps {
                break;
            }
            if budget.is_some_and(|bud| evals + step_cost > bud) {
                stopped = true;
                break;
            }
            g.copy_from_slice(snap.gradient.as_slice());
            add_correction(obj, &snap, x.as_slice(), sampler.draw(rng, b), &mut g);
            evals += step_cost;
            let res = stepper.apply(&mut x, &mut g, k);
            guard_step(&mut tracker, evals, res)?;
            k += 1;
            taken += 1;
        }
        epoch_lengths.push(taken);
        epochs_done = s + 1;
        if stopped {
            break 'epochs;
        }
        if let Some(start) = next_start {
            x = start;
        }
    }

    let last = x;
    let rec = tracker.record_at(obj, last.as_slice(), evals, epochs_done as u64)?;
    if !stopped {
        let _ = observer.checkpoint(&rec, last.as_slice());
    }
    let output = match config.output {
        OutputRule::Last => last.clone(),
        OutputRule::Random => reservoir.into_item().unwrap_or_else(|| last.clone()),
    };
    Ok(RunResult { output, last, trace: tracker.trace, grad_evals: evals, seed: rng.seed(), epoch_lengths })
}
