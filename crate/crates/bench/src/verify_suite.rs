//! Release gate: runs the invariant checks over every objective and reports
//! per-check counts and the worst observed slack (`lhs - bound`, so negative
//! is passing).

use serde::Serialize;
use svrg_core::data::{Dataset, Example, LabelKind};
use svrg_core::losses::LossKind;
use svrg_core::objectives::{build_snapshot, full_value_and_gradient, make_clusters, ErmObjective, FiniteSum, TwoLayerNet};
use svrg_core::optim::{beta_weights, epoch_end_weights, svrg_estimator};
use svrg_core::rng::RandomSource;
use svrg_core::verify::{exact_variance, fd_gradient, relative_error, FdConfig};
use svrg_core::{ParamVec, SparseVec};

use crate::error::BenchResult;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub max_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.failures > 0).map(|c| c.name.as_str()).collect()
    }
}

/// Deliberate faults for testing the gate itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaultInjection {
    /// Multiplies the sigmoid loss in the smoothness check while its claimed constant stays 1.
    pub sigmoid_scale: f64,
}

impl FaultInjection {
    pub fn none() -> Self {
        FaultInjection { sigmoid_scale: 1.0 }
    }
}

struct Tally {
    report: CheckReport,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally { report: CheckReport { name: name.into(), cases: 0, failures: 0, max_slack: f64::NEG_INFINITY } }
    }

    /// Records `lhs <= bound`.
    fn check(&mut self, lhs: f64, bound: f64) {
        let slack = lhs - bound;
        self.report.cases += 1;
        if !(slack <= 0.0) {
            self.report.failures += 1;
        }
        self.report.max_slack = if slack.is_nan() { f64::NAN } else { self.report.max_slack.max(slack) };
    }
}

/// Random binary ERM instance with `n` examples of dimension `d`.
pub fn random_erm(rng: &mut RandomSource, n: usize, d: usize, loss: LossKind, lambda: f64) -> BenchResult<ErmObjective> {
    let examples = (0..n)
        .map(|_| {
            let a: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let label = if rng.uniform() < 0.5 { 1 } else { -1 };
            Example { features: SparseVec::from_dense(&a), label }
        })
        .collect();
    let ds = Dataset::with_dim(examples, LabelKind::Binary, d)?;
    Ok(ErmObjective::new(ds, loss, lambda)?)
}

fn random_point(rng: &mut RandomSource, d: usize, scale: f64) -> ParamVec {
    ParamVec::new((0..d).map(|_| scale * rng.standard_normal()).collect()).expect("finite draw")
}

fn unbiasedness(rng: &mut RandomSource) -> BenchResult<CheckReport> {
    let mut t = Tally::new("estimator_unbiased");
    for _ in 0..20 {
        let n = 2 + rng.draw_index(49)?;
        let d = 1 + rng.draw_index(10)?;
        let obj = random_erm(rng, n, d, LossKind::Logistic, 1e-3)?;
        for _ in 0..5 {
            let x = random_point(rng, d, 1.0);
            let snap = build_snapshot(&obj, &random_point(rng, d, 1.0), true)?;
            let mut mean = vec![0.0; d];
            for i in 0..n {
                let e = svrg_estimator(&obj, &snap, &x, &[i])?;
                mean.iter_mut().zip(e.as_slice()).for_each(|(m, v)| *m += v / n as f64);
            }
            let (_, g) = full_value_and_gradient(&obj, &x)?;
            t.check(relative_error(&mean, g.as_slice()), 1e-12);
        }
    }
    Ok(t.report)
}

fn variance_bound(rng: &mut RandomSource) -> BenchResult<CheckReport> {
    let mut t = Tally::new("variance_bound");
    for k in 0..30 {
        let loss = LossKind::benchmark_set()[k % 6];
        let n = 2 + rng.draw_index(30)?;
        let d = 1 + rng.draw_index(8)?;
        let obj = random_erm(rng, n, d, loss, 1e-2)?;
        let r = exact_variance(&obj, &random_point(rng, d, 1.0), &random_point(rng, d, 1.0))?;
        t.check(r.variance, r.bound + 1e-9);
    }
    Ok(t.report)
}

/// `|phi'(s) - phi'(t)| <= L_phi |s - t|` on random pairs, with the fault applied to the sigmoid.
fn loss_smoothness(rng: &mut RandomSource, fault: FaultInjection) -> BenchResult<CheckReport> {
    let mut t = Tally::new("loss_smoothness");
    for kind in LossKind::benchmark_set() {
        let scale = if kind == LossKind::Sigmoid { fault.sigmoid_scale } else { 1.0 };
        for _ in 0..2000 {
            let s = 8.0 * rng.standard_normal();
            let u = s + 2.0 * rng.standard_normal();
            let gap = scale * (kind.eval(s).derivative - kind.eval(u).derivative).abs();
            t.check(gap, kind.smoothness() * (s - u).abs() + 1e-12);
        }
    }
    Ok(t.report)
}

fn beta_bounds() -> BenchResult<CheckReport> {
    let mut t = Tally::new("beta_bounds");
    let floor = (-1.0f64).exp();
    for m0 in (1..=10_000).step_by(37).chain([10_000]) {
        for b in beta_weights(m0)? {
            t.check(b, 1.0);
            t.check(floor, b);
        }
    }
    Ok(t.report)
}

fn end_distribution() -> BenchResult<CheckReport> {
    let mut t = Tally::new("end_distribution_normalized");
    for m0 in [1, 2, 3, 5, 10, 64, 1000] {
        let w = epoch_end_weights(m0, &beta_weights(m0)?)?;
        let total: f64 = w.probabilities.iter().sum();
        t.check((total - 1.0).abs(), 1e-12);
        for p in &w.probabilities {
            t.check(-p, 0.0);
        }
    }
    Ok(t.report)
}

fn fd_erm(rng: &mut RandomSource) -> BenchResult<CheckReport> {
    let mut t = Tally::new("gradient_fd_erm");
    for loss in LossKind::benchmark_set() {
        let obj = random_erm(rng, 12, 5, loss, 1e-2)?;
        for _ in 0..4 {
            let x = random_point(rng, 5, 0.5);
            let (_, g) = full_value_and_gradient(&obj, &x)?;
            let fd = fd_gradient(|p| obj.value_and_gradient(p).0, &x, FdConfig::default())?;
            t.check(relative_error(g.as_slice(), fd.as_slice()), 1e-5);
        }
    }
    Ok(t.report)
}

fn fd_nets(rng: &mut RandomSource) -> BenchResult<CheckReport> {
    let mut t = Tally::new("gradient_fd_net");
    for (fan_in, hidden, classes) in [(3, 4, 2), (8, 16, 10)] {
        let ds = make_clusters(20, fan_in, classes, rng.fork(fan_in as u64).seed())?;
        let net = TwoLayerNet::new(ds, hidden, 1e-3)?;
        for _ in 0..3 {
            let x = net.init_params(rng);
            let (_, g) = full_value_and_gradient(&net, &x)?;
            let fd = fd_gradient(|p| net.value_and_gradient(p).0, &x, FdConfig::default())?;
            t.check(relative_error(g.as_slice(), fd.as_slice()), 1e-5);
        }
    }
    Ok(t.report)
}

/// Runs every check with a fixed seed.
pub fn cmd_verify(seed: u64, fault: FaultInjection) -> BenchResult<VerifyReport> {
    let rng = RandomSource::new(seed);
    let checks = vec![
        unbiasedness(&mut rng.fork(1))?,
        variance_bound(&mut rng.fork(2))?,
        loss_smoothness(&mut rng.fork(3), fault)?,
        beta_bounds()?,
        end_distribution()?,
        fd_erm(&mut rng.fork(4))?,
        fd_nets(&mut rng.fork(5))?,
    ];
    let passed = checks.iter().all(|c| c.failures == 0);
    Ok(VerifyReport { passed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let r = cmd_verify(0, FaultInjection::none()).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks());
        assert!(r.checks.iter().all(|c| c.cases > 0 && c.max_slack <= 0.0));
    }

    #[test]
    fn doubled_sigmoid_fails_smoothness_only() {
        let r = cmd_verify(0, FaultInjection { sigmoid_scale: 2.0 }).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failed_checks(), vec!["loss_smoothness"]);
    }
}
