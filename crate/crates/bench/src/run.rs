//! Dispatch from a configured optimizer to the core algorithms.

use svrg_core::objectives::FiniteSum;
use svrg_core::optim::{
    gd_run, sgd_run, svrg_full_run, svrg_simple_run, GdConfig, LearningRate, RunResult, SgdConfig, SvrgConfig,
    SvrgSchedule,
};
use svrg_core::rng::RandomSource;
use svrg_core::ParamVec;

use crate::config::{Model, Optimizer, RunConfig, ScheduleKind, DEFAULT_PASSES};
use crate::error::{config_err, BenchResult};
use crate::problem::{starting_point, stream, Objective};

/// Default AdaGrad step for `adagrad`, `svrg3` and `svrg4`.
pub const DEFAULT_ADAGRAD_ALPHA: f64 = 0.1;

/// Epoch structure for the SVRG variants.
///
/// The experiment schedule takes `m = 2n` for ERM and `m = 5n/b` for
/// networks, then rounds `m0` the same way as the theory schedule. Explicit
/// `m`, `m0` and `eta` settings override either choice.
pub fn svrg_schedule(obj: &dyn FiniteSum, config: &RunConfig) -> BenchResult<SvrgSchedule> {
    let n = obj.len();
    let b = config.batch();
    let m = config.m.or(match config.schedule {
        ScheduleKind::Theory => None,
        ScheduleKind::Experiment => Some(match config.model {
            Model::Erm => 2 * n,
            Model::Net => (5 * n / b).max(1),
        }),
    });
    let mut sched = match config.m0 {
        Some(m0) => {
            let m = m.unwrap_or(n);
            SvrgSchedule::new(m, m0, 1.0 / (m0 as f64 * obj.smoothness()))?
        }
        None => SvrgSchedule::theory(n, obj.smoothness(), m)?,
    };
    if let Some(eta) = config.eta {
        sched = sched.with_eta(eta)?;
    }
    Ok(sched)
}

/// Learning rate actually used, or `None` for the schedule's constant step.
pub fn effective_lr(obj: &dyn FiniteSum, config: &RunConfig) -> Option<LearningRate> {
    if let Some(lr) = config.lr {
        return Some(lr.into());
    }
    match config.optimizer {
        Optimizer::Gd | Optimizer::Svrg1 | Optimizer::Svrg2 => None,
        Optimizer::Sgd => Some(LearningRate::Constant(config.eta.unwrap_or(1.0 / obj.smoothness()))),
        Optimizer::Adagrad | Optimizer::Svrg3 | Optimizer::Svrg4 => Some(LearningRate::adagrad(DEFAULT_ADAGRAD_ALPHA)),
    }
}

/// Runs the configured optimizer on `obj` from its default starting point.
pub fn run_optimizer(obj: &Objective, config: &RunConfig) -> BenchResult<RunResult> {
    let x0 = starting_point(obj, config.seed);
    run_from(obj.as_dyn(), &x0, config)
}

pub fn run_from(obj: &dyn FiniteSum, x0: &ParamVec, config: &RunConfig) -> BenchResult<RunResult> {
    let n = obj.len();
    let b = config.batch();
    if b > n {
        return config_err(format!("batch size {b} exceeds the {n} training examples"));
    }
    let mut rng = RandomSource::new(config.seed).fork(stream::OPTIMIZER);
    let budget = match (config.epochs, config.passes) {
        (_, Some(p)) => Some(p),
        (None, None) => Some(DEFAULT_PASSES),
        (Some(_), None) => None,
    };
    // Every epoch or GD step costs at least one pass, so this bounds the loop count.
    let by_budget = budget.map_or(usize::MAX, |p| p.ceil() as usize);
    let lr = effective_lr(obj, config);
    let result = match config.optimizer {
        Optimizer::Gd => {
            let steps = config.epochs.unwrap_or(by_budget);
            let cfg = GdConfig { step: config.eta, max_passes: budget, wall_clock: config.wall_clock, ..GdConfig::new(steps) };
            gd_run(obj, x0, &cfg)?
        }
        Optimizer::Sgd | Optimizer::Adagrad => {
            let iterations = match config.epochs {
                Some(e) => (e * n.div_ceil(b)) as u64,
                None => (budget.unwrap_or(DEFAULT_PASSES) * n as f64 / b as f64).ceil() as u64,
            };
            let cfg = SgdConfig {
                batch: b,
                output: config.output.into(),
                max_passes: budget,
                wall_clock: config.wall_clock,
                ..SgdConfig::new(iterations.max(1), lr.expect("stochastic methods always have a rate"))
            };
            sgd_run(obj, x0, &cfg, &mut rng)?
        }
        Optimizer::Svrg1 | Optimizer::Svrg2 | Optimizer::Svrg3 | Optimizer::Svrg4 => {
            let sched = svrg_schedule(obj, config)?;
            let cfg = SvrgConfig {
                batch: b,
                snapshot: config.accounting.into(),
                output: config.output.into(),
                lr,
                max_passes: budget,
                wall_clock: config.wall_clock,
                ..SvrgConfig::new(config.epochs.unwrap_or(by_budget).max(1))
            };
            if config.optimizer == Optimizer::Svrg1 {
                svrg_simple_run(obj, x0, &sched, &cfg, &mut rng)?
            } else {
                svrg_full_run(obj, x0, &sched, &cfg, &mut rng)?
            }
        }
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_problem;

    fn config(extra: &str) -> RunConfig {
        RunConfig::from_toml(&format!("{extra}\n[synthetic]\nn = 40\nd = 4\nseed = 3\n")).unwrap()
    }

    #[test]
    fn experiment_epoch_lengths() {
        let c = config("");
        let obj = build_problem(&c).unwrap();
        let s = svrg_schedule(obj.as_dyn(), &c).unwrap();
        assert_eq!(s.m, 80);
        let c = config("m = 40\nm0 = 20\neta = 0.01");
        let s = svrg_schedule(obj.as_dyn(), &c).unwrap();
        assert_eq!((s.m, s.m0, s.eta), (40, 20, 0.01));
    }

    #[test]
    fn net_epoch_length_uses_batch() {
        let c = RunConfig::from_toml("model = \"net\"\nhidden = 3\n[synthetic]\nkind = \"clusters\"\nn = 200\nd = 4\nclasses = 3\n")
            .unwrap();
        let obj = build_problem(&c).unwrap();
        // b = 100 by default, so m = 5n/b = 10 before m0 rounding (m0 = m here).
        let s = svrg_schedule(obj.as_dyn(), &c).unwrap();
        assert_eq!(s.m, 10);
    }

    #[test]
    fn every_optimizer_runs() {
        for opt in Optimizer::ALL {
            let c = config(&format!("optimizer = \"{}\"\npasses = 3\nbatch_size = 2", opt.name()));
            let obj = build_problem(&c).unwrap();
            let r = run_optimizer(&obj, &c).unwrap();
            assert!(r.grad_evals <= 3 * 40, "{opt:?}");
            assert!(r.trace.windows(2).all(|w| w[0].passes < w[1].passes), "{opt:?}");
        }
    }
}
