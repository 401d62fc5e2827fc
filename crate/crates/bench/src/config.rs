//! Run configuration, read from TOML and overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svrg_core::losses::LossKind;
use svrg_core::optim::{LearningRate, OutputRule, SnapshotMode, ADAGRAD_DELTA};

use crate::error::{config_err, BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Gd,
    Sgd,
    Adagrad,
    /// Simplified SVRG (last iterate starts the next epoch).
    #[default]
    Svrg1,
    /// Full SVRG with random epoch ends and pooled output.
    Svrg2,
    /// Full SVRG with AdaGrad scaling of the estimator.
    Svrg3,
    /// As `svrg3` with a default batch of 16.
    Svrg4,
}

impl Optimizer {
    pub const ALL: [Optimizer; 7] = [
        Optimizer::Gd,
        Optimizer::Sgd,
        Optimizer::Adagrad,
        Optimizer::Svrg1,
        Optimizer::Svrg2,
        Optimizer::Svrg3,
        Optimizer::Svrg4,
    ];

    pub fn is_svrg(self) -> bool {
        matches!(self, Optimizer::Svrg1 | Optimizer::Svrg2 | Optimizer::Svrg3 | Optimizer::Svrg4)
    }

    pub fn uses_adagrad(self) -> bool {
        matches!(self, Optimizer::Adagrad | Optimizer::Svrg3 | Optimizer::Svrg4)
    }

    pub fn name(self) -> &'static str {
        match self {
            Optimizer::Gd => "gd",
            Optimizer::Sgd => "sgd",
            Optimizer::Adagrad => "adagrad",
            Optimizer::Svrg1 => "svrg1",
            Optimizer::Svrg2 => "svrg2",
            Optimizer::Svrg3 => "svrg3",
            Optimizer::Svrg4 => "svrg4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Erm,
    Net,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `m = 2n` for ERM, `m = 5n/b` for networks.
    #[default]
    Experiment,
    /// `m = n`, `m0` from the sub-epoch rule, `eta = 1/(m0 L)`.
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Accounting {
    #[default]
    Auto,
    Stored,
    Recompute,
}

impl From<Accounting> for SnapshotMode {
    fn from(a: Accounting) -> Self {
        match a {
            Accounting::Auto => SnapshotMode::Auto,
            Accounting::Stored => SnapshotMode::Stored,
            Accounting::Recompute => SnapshotMode::Recompute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    #[default]
    Random,
    Last,
}

impl From<Output> for OutputRule {
    fn from(o: Output) -> Self {
        match o {
            Output::Random => OutputRule::Random,
            Output::Last => OutputRule::Last,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// Two overlapping Gaussian classes.
    #[default]
    Gaussian,
    /// One-hot census-style records with 123 features.
    Categorical,
    /// Gaussian clusters for the multiclass network.
    Clusters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default)]
    pub kind: SyntheticKind,
    pub n: usize,
    #[serde(default = "default_synth_dim")]
    pub d: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_synth_dim() -> usize {
    20
}

fn default_classes() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LrSpec {
    Constant {
        eta: f64,
    },
    Polynomial {
        alpha: f64,
        exponent: f64,
        /// Decaying `(1 + k/n)^{-exponent}` when true (the default).
        #[serde(default = "yes")]
        decay: bool,
    },
    Adagrad {
        alpha: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

fn yes() -> bool {
    true
}

fn default_delta() -> f64 {
    ADAGRAD_DELTA
}

impl From<LrSpec> for LearningRate {
    fn from(s: LrSpec) -> Self {
        match s {
            LrSpec::Constant { eta } => LearningRate::Constant(eta),
            LrSpec::Polynomial { alpha, exponent, decay } => LearningRate::Polynomial { alpha, exponent, decay },
            LrSpec::Adagrad { alpha, delta } => LearningRate::AdaGrad { alpha, delta },
        }
    }
}

/// Raw LibSVM labels: `positive` gives one-vs-rest, `classes` multiclass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub positive: Option<f64>,
    pub classes: Option<usize>,
    #[serde(default)]
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    /// Regularization grid; 10 log-spaced values in `[1e-6, 1e-1]` by default.
    pub lambdas: Option<Vec<f64>>,
    /// Step-size grid; 10 log-spaced values from `0.01/L` to `100/L` by default.
    pub alphas: Option<Vec<f64>>,
    /// Polynomial exponents for `sgd`; `0, 0.1, ..., 1` by default.
    pub exponents: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default = "default_budget")]
    pub passes: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub log: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn default_budget() -> f64 {
    50.0
}

fn default_train_fraction() -> f64 {
    0.8
}

impl Default for TuneSpec {
    fn default() -> Self {
        TuneSpec {
            lambdas: None,
            alphas: None,
            exponents: None,
            seeds: 1,
            passes: default_budget(),
            train_fraction: default_train_fraction(),
            log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub test_dataset: Option<PathBuf>,
    #[serde(default)]
    pub labels: LabelSpec,
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub model: Model,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub passes: Option<f64>,
    #[serde(default)]
    pub schedule: ScheduleKind,
    pub m: Option<usize>,
    pub m0: Option<usize>,
    pub eta: Option<f64>,
    pub lr: Option<LrSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub flip_fraction: f64,
    #[serde(default)]
    pub accounting: Accounting,
    #[serde(default)]
    pub output: Output,
    pub trace: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub wall_clock: bool,
    #[serde(default)]
    pub tune: TuneSpec,
}

fn default_hidden() -> usize {
    svrg_core::objectives::DEFAULT_HIDDEN
}

fn default_loss() -> String {
    "sigmoid".into()
}

/// Pass budget used when neither `epochs` nor `passes` is set.
pub const DEFAULT_PASSES: f64 = 50.0;

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> BenchResult<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> BenchResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn loss_kind(&self) -> BenchResult<LossKind> {
        self.loss.parse().map_err(|e: svrg_core::Error| BenchError::Config(e.to_string()))
    }

    /// Batch size, defaulting to 1 for linear ERM, 100 for networks and 16 for `svrg4`.
    pub fn batch(&self) -> usize {
        self.batch_size.unwrap_or(match (self.optimizer, self.model) {
            (Optimizer::Svrg4, _) => 16,
            (_, Model::Net) => 100,
            (_, Model::Erm) => 1,
        })
    }

    /// Checks consistency that does not need the data.
    pub fn validate(&self) -> BenchResult<()> {
        if self.dataset.is_some() == self.synthetic.is_some() {
            return config_err("set exactly one of `dataset` and `[synthetic]`");
        }
        self.loss_kind()?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return config_err("`lambda` must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return config_err("`flip_fraction` must lie in [0, 1]");
        }
        if self.batch() == 0 {
            return config_err("`batch_size` must be positive");
        }
        if self.epochs == Some(0) {
            return config_err("`epochs` must be positive");
        }
        if let Some(p) = self.passes {
            if !(p > 0.0 && p.is_finite()) {
                return config_err("`passes` must be positive");
            }
        }
        if self.hidden == 0 {
            return config_err("`hidden` must be positive");
        }
        if let Some(lr) = self.lr {
            let lr = LearningRate::from(lr);
            lr.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            let adaptive = matches!(lr, LearningRate::AdaGrad { .. });
            if self.optimizer.uses_adagrad() != adaptive {
                return config_err(format!("optimizer `{}` does not take a `{}` rate", self.optimizer.name(), lr));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return config_err("`eta` must be positive");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::from_toml("[synthetic]\nn = 64\n").unwrap();
        assert_eq!(c.optimizer, Optimizer::Svrg1);
        assert_eq!(c.batch(), 1);
        c.validate().unwrap();
        let again = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_unknown_keys_and_conflicts() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        let c = RunConfig::from_toml("dataset = \"a\"\n[synthetic]\nn = 3\n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml("optimizer = \"sgd\"\nlr = { kind = \"adagrad\", alpha = 0.1 }\n[synthetic]\nn = 3\n").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_batch_defaults() {
        let c = RunConfig::from_toml("optimizer = \"svrg4\"\nmodel = \"net\"\n[synthetic]\nn = 3\n").unwrap();
        assert_eq!(c.batch(), 16);
        let c = RunConfig::from_toml("optimizer = \"svrg3\"\nmodel = \"net\"\n[synthetic]\nn = 3\n").unwrap();
        assert_eq!(c.batch(), 100);
    }
}
