use super::run::RunResult;
use super::schedule::SvrgSchedule;
use super::svrg::{svrg_full_run, SvrgConfig};
use crate::error::{invalid, Result};
use crate::linalg::ParamVec;
use crate::objectives::FiniteSum;
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq)]
pub struct DriveResult {
    /// Output of the final round; traces and evaluation counts are concatenated.
    pub result: RunResult,
    /// Objective at each round's output.
    pub round_objectives: Vec<f64>,
    /// Epochs used per round.
    pub epochs_per_round: usize,
}

/// Epochs per round so that one full-SVRG call is expected to halve the gap
/// `f - f*` on a `tau`-gradient-dominated objective: `ceil(8 tau / (eta (m - m0 + 1)))`.
pub fn epochs_per_round(tau: f64, schedule: &SvrgSchedule) -> usize {
    let per_epoch = schedule.eta * (schedule.m - schedule.m0 + 1) as f64;
    ((8.0 * tau / per_epoch).ceil() as usize).max(1)
}

/// Restarts full SVRG `rounds` times, each round starting from the previous output.
///
/// `inner.epochs` is replaced by [`epochs_per_round`].
pub fn grad_dominated_drive<F: FiniteSum + ?Sized>(
    obj: &F,
    x_start: &ParamVec,
    tau: f64,
    rounds: usize,
    schedule: &SvrgSchedule,
    inner: &SvrgConfig,
    rng: &mut RandomSource,
) -> Result<DriveResult> {
    if rounds == 0 {
        return invalid("need at least one round");
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return invalid(format!("domination constant {tau} must be positive"));
    }
    let epochs = epochs_per_round(tau, schedule);
    let cfg = SvrgConfig { epochs, ..inner.clone() };
    let n = obj.len() as f64;
    let mut x = x_start.clone();
    let mut combined: Option<RunResult> = None;
    let mut round_objectives = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let res = svrg_full_run(obj, &x, schedule, &cfg, rng)?;
        round_objectives.push(obj.value_and_gradient(res.output.as_slice()).0);
        log::debug!("round {r}: objective {}", round_objectives[r]);
        x = res.output.clone();
        combined = Some(match combined {
            None => res,
            Some(mut acc) => {
                let offset = acc.grad_evals as f64 / n;
                let epoch_offset = acc.trace.last().map_or(0, |t| t.epoch);
                acc.trace.extend(res.trace.iter().map(|t| {
                    let mut t = *t;
                    t.passes += offset;
                    t.epoch += epoch_offset;
                    t
                }));
                acc.grad_evals += res.grad_evals;
                acc.epoch_lengths.extend(res.epoch_lengths);
                acc.output = res.output;
                acc.last = res.last;
                acc
            }
        });
    }
    Ok(DriveResult { result: combined.expect("rounds >= 1"), round_objectives, epochs_per_round: epochs })
}
