use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use svrg_core::data::{write_trace_with_comments, TraceRecord};
use svrg_core::objectives::full_value_and_gradient;
use svrg_core::optim::RunResult;
use svrg_core::Error;

use crate::config::RunConfig;
use crate::error::{BenchError, BenchResult};
use crate::problem::build_problem;
use crate::run::run_optimizer;

/// What `train` reports besides the trace file.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub result: RunResult,
    /// Objective and squared gradient norm at the returned iterate.
    pub final_objective: f64,
    pub final_grad_norm_sq: f64,
    pub passes: f64,
    pub wall_seconds: f64,
    pub trace_path: Option<PathBuf>,
}

/// The effective configuration as `#` header lines for the trace.
pub fn config_header(config: &RunConfig) -> Vec<String> {
    vec!["effective configuration".to_string(), config.to_toml()]
}

/// Writes via a temporary sibling and a rename, so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> BenchResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_trace_file(path: &Path, config: &RunConfig, trace: &[TraceRecord]) -> BenchResult<()> {
    let mut buf = Vec::new();
    write_trace_with_comments(&config_header(config), trace, &mut buf)?;
    write_atomic(path, &buf)
}

/// Runs the configured optimizer and writes its trace when a path is set.
///
/// On divergence the partial trace is still written before the error is returned.
pub fn cmd_train(config: &RunConfig) -> BenchResult<TrainSummary> {
    config.validate()?;
    let start = Instant::now();
    let obj = build_problem(config)?;
    let outcome = run_optimizer(&obj, config);
    let result = match outcome {
        Ok(r) => r,
        Err(BenchError::Core(Error::Diverged(mut d))) => {
            if let Some(path) = &config.trace {
                // A blown-up gradient norm may be NaN, which the trace format rejects.
                for r in &mut d.trace {
                    if r.grad_norm_sq.is_nan() {
                        r.grad_norm_sq = f64::INFINITY;
                    }
                }
                write_trace_file(path, config, &d.trace)?;
            }
            return Err(BenchError::Core(Error::Diverged(d)));
        }
        Err(e) => return Err(e),
    };
    let (value, grad) = full_value_and_gradient(obj.as_dyn(), &result.output)?;
    let passes = result.grad_evals as f64 / obj.as_dyn().len() as f64;
    if let Some(path) = &config.trace {
        write_trace_file(path, config, &result.trace)?;
    }
    Ok(TrainSummary {
        final_objective: value,
        final_grad_norm_sq: grad.sq_norm(),
        passes,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace_path: config.trace.clone(),
        result,
    })
}
