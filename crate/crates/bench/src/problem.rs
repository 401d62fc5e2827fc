//! Turning a [`RunConfig`] into data, an objective and a starting point.

use std::path::Path;

use svrg_core::data::{read_libsvm_file, Dataset, LabelKind, LabelMap};
use svrg_core::objectives::{make_categorical, make_clusters, make_synthetic, ErmObjective, FiniteSum, TwoLayerNet};
use svrg_core::rng::RandomSource;
use svrg_core::ParamVec;

use crate::config::{LabelSpec, Model, RunConfig, SyntheticKind};
use crate::error::{config_err, BenchResult};

/// Stream ids for seeds forked off the run seed.
pub mod stream {
    pub const FLIP: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const OPTIMIZER: u64 = 4;
}

pub enum Objective {
    Erm(ErmObjective),
    Net(TwoLayerNet),
}

impl Objective {
    pub fn as_dyn(&self) -> &dyn FiniteSum {
        match self {
            Objective::Erm(o) => o,
            Objective::Net(o) => o,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        match self {
            Objective::Erm(o) => o.dataset(),
            Objective::Net(o) => o.dataset(),
        }
    }

    /// Match rate of `sign <a, x>` (ERM) or the argmax class (network) on `data`.
    pub fn accuracy(&self, data: &Dataset, x: &ParamVec) -> BenchResult<f64> {
        if data.is_empty() {
            return Ok(f64::NAN);
        }
        let theta = x.as_slice();
        let mut hits = 0usize;
        for e in data.examples() {
            let predicted = match self {
                Objective::Erm(_) => {
                    // Features absent from the training data carry no weight.
                    let margin: f64 = e.features.iter().filter(|(j, _)| *j < theta.len()).map(|(j, a)| theta[j] * a).sum();
                    if margin >= 0.0 {
                        1
                    } else {
                        -1
                    }
                }
                Objective::Net(net) => net.predict(&e.features, theta)?,
            };
            hits += usize::from(predicted == e.label);
        }
        Ok(hits as f64 / data.len() as f64)
    }
}

pub fn label_map(spec: &LabelSpec, model: Model) -> BenchResult<LabelMap> {
    match (model, spec.positive, spec.classes) {
        (_, Some(_), Some(_)) => config_err("set at most one of `labels.positive` and `labels.classes`"),
        (Model::Erm, None, Some(_)) => config_err("`labels.classes` only applies to network models"),
        (Model::Erm, Some(p), None) => Ok(LabelMap::OneVsRest(p)),
        (Model::Erm, None, None) => Ok(LabelMap::Auto),
        (Model::Net, Some(_), None) => config_err("network models need multiclass labels"),
        (Model::Net, None, classes) => Ok(LabelMap::Multiclass { classes: classes.unwrap_or(10), offset: spec.offset }),
    }
}

pub fn read_dataset(path: &Path, config: &RunConfig) -> BenchResult<Dataset> {
    Ok(read_libsvm_file(path, &label_map(&config.labels, config.model)?)?)
}

/// The configured training data before any label flipping.
pub fn load_data(config: &RunConfig) -> BenchResult<Dataset> {
    config.validate()?;
    if let Some(path) = &config.dataset {
        return read_dataset(path, config);
    }
    let spec = config.synthetic.as_ref().expect("validated");
    let ds = match (spec.kind, config.model) {
        (SyntheticKind::Gaussian, Model::Erm) => {
            // The objective is rebuilt below with the configured loss; only the data is kept.
            make_synthetic(spec.n, spec.d, svrg_core::losses::LossKind::Squared, 0.0, spec.seed)?
                .objective
                .dataset()
                .clone()
        }
        (SyntheticKind::Categorical, Model::Erm) => make_categorical(spec.n, spec.seed)?,
        (SyntheticKind::Clusters, Model::Net) => make_clusters(spec.n, spec.d, spec.classes, spec.seed)?,
        (kind, model) => return config_err(format!("synthetic kind {kind:?} does not fit model {model:?}")),
    };
    Ok(ds)
}

/// Applies the configured label flipping with its own forked stream.
pub fn flip(data: &Dataset, config: &RunConfig) -> BenchResult<Dataset> {
    if config.flip_fraction == 0.0 {
        return Ok(data.clone());
    }
    if data.kind() != LabelKind::Binary {
        return config_err("label flipping needs binary labels");
    }
    Ok(data.flip_labels(config.flip_fraction, &mut RandomSource::new(config.seed).fork(stream::FLIP))?)
}

pub fn build_objective(data: Dataset, config: &RunConfig, lambda: f64) -> BenchResult<Objective> {
    if config.batch() > data.len() {
        return config_err(format!("batch size {} exceeds the {} training examples", config.batch(), data.len()));
    }
    Ok(match config.model {
        Model::Erm => Objective::Erm(ErmObjective::new(data, config.loss_kind()?, lambda)?),
        Model::Net => Objective::Net(TwoLayerNet::new(data, config.hidden, lambda)?),
    })
}

/// Zero for ERM, a seeded random initialization for networks.
pub fn starting_point(obj: &Objective, seed: u64) -> ParamVec {
    match obj {
        Objective::Erm(o) => ParamVec::zeros(o.dim()),
        Objective::Net(net) => net.init_params(&mut RandomSource::new(seed).fork(stream::INIT)),
    }
}

/// Data, flipping and objective for a plain training run.
pub fn build_problem(config: &RunConfig) -> BenchResult<Objective> {
    let data = flip(&load_data(config)?, config)?;
    build_objective(data, config, config.lambda)
}
