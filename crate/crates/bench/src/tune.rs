//! Hyperparameter grids: split, per-regularizer step search, selection by
//! validation accuracy and an optional held-out test report.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svrg_core::data::Dataset;
use svrg_core::objectives::full_value_and_gradient;
use svrg_core::rng::{derive_seed, RandomSource};
use svrg_core::{Error, ParamVec};

use crate::config::{LrSpec, Optimizer, RunConfig};
use crate::error::{config_err, BenchError, BenchResult};
use crate::problem::{build_objective, flip, load_data, read_dataset, starting_point, stream, Objective};
use crate::run::run_from;
use crate::train::write_atomic;

/// `count` values spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
        }
    }
}

pub fn default_lambdas() -> Vec<f64> {
    log_space(1e-6, 1e-1, 10)
}

/// Four decades centred on `1/L`.
pub fn default_alphas(smoothness: f64) -> Vec<f64> {
    log_space(1e-2 / smoothness, 1e2 / smoothness, 10)
}

pub fn default_exponents() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub lambda: f64,
    /// Step size (constant step, polynomial scale or AdaGrad scale, by optimizer).
    pub alpha: f64,
    /// Polynomial decay exponent; only for `sgd`.
    pub exponent: Option<f64>,
}

/// One row of the tuning log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub exponent: Option<f64>,
    /// Mean over seeds of the training objective at the last iterate, i.e. at the pass budget.
    pub final_objective: f64,
    /// Mean over seeds of the exact squared gradient norm there.
    pub final_grad_norm_sq: f64,
    pub diverged: bool,
    /// Mean validation accuracy over seeds; empty when there is no validation set.
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: CellSummary,
    pub cells: Vec<CellSummary>,
    /// Index into `cells` of the step-size winner for each regularizer.
    pub per_lambda_best: Vec<usize>,
    pub test_accuracy: Option<f64>,
}

/// Cells in id order: regularizer outermost, then step, then exponent.
pub fn build_grid(optimizer: Optimizer, lambdas: &[f64], alphas_for: impl Fn(f64) -> Vec<f64>, exponents: &[f64]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &lambda in lambdas {
        for alpha in alphas_for(lambda) {
            if optimizer == Optimizer::Sgd {
                for &e in exponents {
                    cells.push(Cell { id: cells.len(), lambda, alpha, exponent: Some(e) });
                }
            } else {
                cells.push(Cell { id: cells.len(), lambda, alpha, exponent: None });
            }
        }
    }
    cells
}

/// The run configuration for one cell and repeat.
pub fn cell_config(base: &RunConfig, cell: &Cell, repeat: usize) -> RunConfig {
    let mut c = base.clone();
    c.lambda = cell.lambda;
    c.passes = Some(base.tune.passes);
    c.epochs = None;
    c.trace = None;
    c.seed = derive_seed(base.seed, (cell.id as u64) << 16 | repeat as u64);
    match base.optimizer {
        Optimizer::Gd | Optimizer::Svrg1 | Optimizer::Svrg2 => {
            c.eta = Some(cell.alpha);
            c.lr = None;
        }
        Optimizer::Sgd => {
            c.lr = Some(LrSpec::Polynomial { alpha: cell.alpha, exponent: cell.exponent.unwrap_or(0.0), decay: true });
        }
        Optimizer::Adagrad | Optimizer::Svrg3 | Optimizer::Svrg4 => {
            let delta = match base.lr {
                Some(LrSpec::Adagrad { delta, .. }) => delta,
                _ => svrg_core::optim::ADAGRAD_DELTA,
            };
            c.lr = Some(LrSpec::Adagrad { alpha: cell.alpha, delta });
        }
    }
    c
}

struct CellRun {
    summary: CellSummary,
    /// Last iterate of the first repeat, kept for the test report.
    output: Option<ParamVec>,
}

fn run_cell(obj: &Objective, base: &RunConfig, cell: &Cell, validation: Option<&Dataset>) -> BenchResult<CellRun> {
    let repeats = base.tune.seeds.max(1);
    let (mut f_sum, mut g_sum, mut acc_sum) = (0.0, 0.0, 0.0);
    let mut diverged = false;
    let mut first = None;
    for r in 0..repeats {
        let cfg = cell_config(base, cell, r);
        let x0 = starting_point(obj, cfg.seed);
        match run_from(obj.as_dyn(), &x0, &cfg) {
            Ok(res) => {
                let (f, g) = match full_value_and_gradient(obj.as_dyn(), &res.last) {
                    Ok(v) => v,
                    Err(Error::NonFinite(_)) => {
                        diverged = true;
                        break;
                    }
                    Err(e) => return Err(e.into()),
                };
                f_sum += f;
                g_sum += g.sq_norm();
                if let Some(v) = validation {
                    acc_sum += obj.accuracy(v, &res.last)?;
                }
                first.get_or_insert(res.last);
            }
            Err(BenchError::Core(Error::Diverged(_))) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let k = repeats as f64;
    let summary = CellSummary {
        cell: cell.id,
        lambda: cell.lambda,
        alpha: cell.alpha,
        exponent: cell.exponent,
        final_objective: if diverged { f64::NAN } else { f_sum / k },
        final_grad_norm_sq: if diverged { f64::NAN } else { g_sum / k },
        diverged,
        validation_accuracy: validation.filter(|_| !diverged).map(|_| acc_sum / k),
    };
    Ok(CellRun { summary, output: if diverged { None } else { first } })
}

fn tie_key(c: &CellSummary) -> (f64, f64, f64) {
    (c.alpha, c.lambda, c.exponent.unwrap_or(0.0))
}

fn smaller_key(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)).is_lt()
}

/// Per regularizer, the non-diverged cell with the lowest mean training
/// objective; exact ties go to the smaller step, then the smaller exponent.
pub fn best_per_lambda(cells: &[CellSummary]) -> Vec<usize> {
    let mut lambdas: Vec<f64> = cells.iter().map(|c| c.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut out = Vec::new();
    for lambda in lambdas {
        let mut best: Option<usize> = None;
        for (k, c) in cells.iter().enumerate() {
            if c.lambda != lambda || c.diverged || !c.final_objective.is_finite() {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(b) => {
                    let cur = &cells[b];
                    let better = c.final_objective < cur.final_objective
                        || (c.final_objective == cur.final_objective && smaller_key(tie_key(c), tie_key(cur)));
                    Some(if better { k } else { b })
                }
            };
        }
        out.extend(best);
    }
    out
}

/// Among the per-regularizer winners, the highest validation accuracy (lowest
/// objective when there is no validation set); ties go to the smaller step,
/// then the smaller regularizer.
pub fn select_best(cells: &[CellSummary]) -> Option<(usize, Vec<usize>)> {
    let winners = best_per_lambda(cells);
    let score = |c: &CellSummary| match c.validation_accuracy {
        Some(a) => -a,
        None => c.final_objective,
    };
    let mut best: Option<usize> = None;
    for &k in &winners {
        let c = &cells[k];
        best = match best {
            None => Some(k),
            Some(b) => {
                let cur = &cells[b];
                let better = score(c) < score(cur) || (score(c) == score(cur) && smaller_key(tie_key(c), tie_key(cur)));
                Some(if better { k } else { b })
            }
        };
    }
    best.map(|b| (b, winners))
}

/// Runs every cell on `train` (in parallel) and selects the winner.
///
/// `validation` scores the per-regularizer winners; `test`, when given, is
/// only used to report the final accuracy of the chosen cell.
pub fn tune_on(
    train: &Dataset,
    validation: Option<&Dataset>,
    test: Option<&Dataset>,
    base: &RunConfig,
) -> BenchResult<TuneResult> {
    let lambdas = base.tune.lambdas.clone().unwrap_or_else(default_lambdas);
    let exponents = base.tune.exponents.clone().unwrap_or_else(default_exponents);
    if lambdas.is_empty() || exponents.is_empty() || base.tune.alphas.as_ref().is_some_and(Vec::is_empty) {
        return config_err("tuning grid is empty");
    }
    let objectives: Vec<Objective> =
        lambdas.iter().map(|&l| build_objective(train.clone(), base, l)).collect::<BenchResult<_>>()?;
    let grid = build_grid(
        base.optimizer,
        &lambdas,
        |l| {
            let k = lambdas.iter().position(|x| *x == l).expect("lambda from grid");
            base.tune.alphas.clone().unwrap_or_else(|| default_alphas(objectives[k].as_dyn().smoothness()))
        },
        &exponents,
    );
    let lambda_index = |l: f64| lambdas.iter().position(|x| *x == l).expect("lambda from grid");
    log::info!("tuning {} cells x {} seeds", grid.len(), base.tune.seeds.max(1));

    let runs: Vec<CellRun> = grid
        .par_iter()
        .map(|cell| run_cell(&objectives[lambda_index(cell.lambda)], base, cell, validation))
        .collect::<BenchResult<_>>()?;
    let cells: Vec<CellSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let Some((best_idx, per_lambda_best)) = select_best(&cells) else {
        return Err(BenchError::AllDiverged);
    };
    let best = cells[best_idx].clone();
    let test_accuracy = match (test, &runs[best_idx].output) {
        (Some(t), Some(x)) => Some(objectives[lambda_index(best.lambda)].accuracy(t, x)?),
        _ => None,
    };
    Ok(TuneResult { best, cells, per_lambda_best, test_accuracy })
}

/// Pads a dataset's dimension so that weights cover features seen only elsewhere.
fn widen(ds: &Dataset, dim: usize) -> BenchResult<Dataset> {
    if ds.dim() >= dim {
        return Ok(ds.clone());
    }
    Ok(Dataset::with_dim(ds.examples().to_vec(), ds.kind(), dim)?)
}

/// Full tuning protocol from a configuration: flip, split, grid, selection, test report.
pub fn cmd_tune(base: &RunConfig) -> BenchResult<TuneResult> {
    base.validate()?;
    let data = flip(&load_data(base)?, base)?;
    let tf = base.tune.train_fraction;
    let (train, valid) = if tf >= 1.0 {
        (data, None)
    } else {
        let (t, v) = data.split(tf, &mut RandomSource::new(base.seed).fork(stream::SPLIT))?;
        (t, Some(v))
    };
    let test = base.test_dataset.as_deref().map(|p| read_dataset(p, base)).transpose()?;
    let dim = train.dim().max(test.as_ref().map_or(0, Dataset::dim)).max(valid.as_ref().map_or(0, Dataset::dim));
    let train = widen(&train, dim)?;
    let result = tune_on(&train, valid.as_ref(), test.as_ref(), base)?;
    if let Some(path) = &base.tune.log {
        write_log(path, &result.cells)?;
    }
    Ok(result)
}

pub fn write_log(path: &Path, cells: &[CellSummary]) -> BenchResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in cells {
        w.serialize(c).map_err(|e| BenchError::Config(format!("cannot encode tuning log: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn read_log<R: Read>(reader: R) -> BenchResult<Vec<CellSummary>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::Config(format!("bad tuning log: {e}")))
}
