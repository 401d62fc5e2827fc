//! Labelled sparse datasets, LibSVM text I/O, label flipping, splitting and
//! convergence-trace CSV files.

mod libsvm;
mod trace;

pub use libsvm::{parse_libsvm, read_libsvm_file, write_libsvm, LabelMap};
pub use trace::{read_trace, write_trace, write_trace_with_comments, TraceRecord, TRACE_HEADER};

use crate::error::{invalid, Error, Result};
use crate::linalg::SparseVec;
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Labels are `-1` or `+1`.
    Binary,
    /// Labels are `1..=classes`.
    Multiclass { classes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: SparseVec,
    pub label: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    dim: usize,
    kind: LabelKind,
}

/// `round(x)` with halves rounded up, as used for flip counts and split sizes.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

impl Dataset {
    /// Builds a dataset whose dimension is the largest stored feature index.
    pub fn new(examples: Vec<Example>, kind: LabelKind) -> Result<Self> {
        let dim = examples.iter().map(|e| e.features.required_dim()).max().unwrap_or(0);
        Self::with_dim(examples, kind, dim)
    }

    /// Builds a dataset with an explicit dimension, e.g. to align a validation file.
    pub fn with_dim(examples: Vec<Example>, kind: LabelKind, dim: usize) -> Result<Self> {
        if let LabelKind::Multiclass { classes } = kind {
            if classes < 2 {
                return invalid("multiclass datasets need at least two classes");
            }
        }
        for (i, e) in examples.iter().enumerate() {
            let ok = match kind {
                LabelKind::Binary => e.label == 1 || e.label == -1,
                LabelKind::Multiclass { classes } => e.label >= 1 && e.label as usize <= classes,
            };
            if !ok {
                return invalid(format!("example {i}: label {} not valid for {kind:?}", e.label));
            }
            let need = e.features.required_dim();
            if need > dim {
                return Err(Error::DimensionMismatch { expected: dim, found: need });
            }
        }
        Ok(Dataset { examples, dim, kind })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> Result<&Example> {
        self.examples.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.len() })
    }

    /// Largest squared feature norm, `max_i ||a_i||^2`.
    pub fn max_sq_norm(&self) -> f64 {
        self.examples.iter().map(|e| e.features.sq_norm()).fold(0.0, f64::max)
    }

    /// Examples at the given 0-based positions, in that order, keeping the dimension.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            out.push(self.example(i)?.clone());
        }
        Ok(Dataset { examples: out, dim: self.dim, kind: self.kind })
    }

    /// Copy with `round(fraction * n)` uniformly chosen labels negated.
    ///
    /// Applying it twice with the same seed restores the original labels.
    pub fn flip_labels(&self, fraction: f64, rng: &mut RandomSource) -> Result<Dataset> {
        if self.kind != LabelKind::Binary {
            return invalid("label flipping needs a binary dataset");
        }
        if !(0.0..=1.0).contains(&fraction) {
            return invalid(format!("flip fraction {fraction} outside [0, 1]"));
        }
        let count = round_half_up(fraction * self.len() as f64).min(self.len());
        let mut out = self.clone();
        for i in rng.sample_without_replacement(self.len(), count)? {
            out.examples[i].label = -out.examples[i].label;
        }
        Ok(out)
    }

    /// Random partition into `round(train_fraction * n)` training examples and the rest.
    ///
    /// Both sides keep the parent's dimension and their original relative order.
    /// The training size is clamped to `1..n` so neither side is empty.
    pub fn split(&self, train_fraction: f64, rng: &mut RandomSource) -> Result<(Dataset, Dataset)> {
        let n = self.len();
        if n < 2 {
            return invalid(format!("cannot split {n} examples"));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return invalid(format!("train fraction {train_fraction} outside (0, 1)"));
        }
        let n_train = round_half_up(train_fraction * n as f64).clamp(1, n - 1);
        let perm = rng.sample_without_replacement(n, n)?;
        let mut train_idx = perm[..n_train].to_vec();
        let mut valid_idx = perm[n_train..].to_vec();
        train_idx.sort_unstable();
        valid_idx.sort_unstable();
        Ok((self.subset(&train_idx)?, self.subset(&valid_idx)?))
    }
}
