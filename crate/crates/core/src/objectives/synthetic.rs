//! Seeded generators for desk-scale test problems.

use super::{ErmObjective, FiniteSum};
use crate::data::{Dataset, Example, LabelKind};
use crate::error::{invalid, Result};
use crate::linalg::SparseVec;
use crate::losses::{unscaled_sigmoid, LossKind};
use crate::rng::RandomSource;

/// A generated ERM instance together with its value at the all-zero start.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub objective: ErmObjective,
    pub initial_value: f64,
}

/// Spread of each class around its mean in [`make_synthetic`].
const CLASS_SPREAD: f64 = 0.2;

/// Binary ERM instance with Gaussian features and uniformly random labels.
///
/// Each label `l_i` is `±1` with equal probability and `a_i = l_i * mu + 0.2 * z_i`
/// with `z_i` standard normal and `mu` a random unit direction, so the classes
/// overlap only slightly. The smoothness constant is the usual
/// `L_phi * max ||a_i||^2 + lambda` of the generated data.
pub fn make_synthetic(n: usize, d: usize, loss: LossKind, lambda: f64, seed: u64) -> Result<Synthetic> {
    if n == 0 || d == 0 {
        return invalid("synthetic problems need n >= 1 and d >= 1");
    }
    let mut rng = RandomSource::new(seed);
    let mut mu: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    mu.iter_mut().for_each(|v| *v /= norm);

    let examples = (0..n)
        .map(|_| {
            let label = if rng.uniform() < 0.5 { 1 } else { -1 };
            let a: Vec<f64> = mu.iter().map(|m| label as f64 * m + CLASS_SPREAD * rng.standard_normal()).collect();
            Example { features: SparseVec::from_dense(&a), label }
        })
        .collect();
    let dataset = Dataset::with_dim(examples, LabelKind::Binary, d)?;
    let objective = ErmObjective::new(dataset, loss, lambda)?;
    let initial_value = objective.value_and_gradient(&vec![0.0; d]).0;
    Ok(Synthetic { objective, initial_value })
}

/// Category counts of the census-style generator; they sum to 123 features.
pub const CATEGORICAL_GROUPS: [usize; 14] = [5, 7, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 42];

/// Binary dataset of one-hot categorical records, 123 features with 14 active per row.
///
/// Category frequencies within a group fall off like `1/(k+1)`. Labels follow
/// a planted logistic model whose bias is tuned so about a quarter are positive.
pub fn make_categorical(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return invalid("need at least one record");
    }
    let mut rng = RandomSource::new(seed);
    let dim: usize = CATEGORICAL_GROUPS.iter().sum();
    let weights: Vec<f64> = (0..dim).map(|_| 1.2 * rng.standard_normal()).collect();
    let mut rows = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let mut offset = 0u32;
        let mut pairs = Vec::with_capacity(CATEGORICAL_GROUPS.len());
        let mut score = 0.0;
        for &card in &CATEGORICAL_GROUPS {
            let freq: Vec<f64> = (0..card).map(|k| 1.0 / (k as f64 + 1.0)).collect();
            let k = rng.weighted_index(&freq)? as u32;
            let idx = offset + k + 1;
            score += weights[idx as usize - 1];
            pairs.push((idx, 1.0));
            offset += card as u32;
        }
        rows.push(SparseVec::from_one_based(&pairs)?);
        scores.push(score);
    }
    // Bias with mean predicted positive rate 1/4, by bisection.
    let rate = |b: f64| scores.iter().map(|s| unscaled_sigmoid(-(s + b))).sum::<f64>() / n as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > 0.25 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let bias = 0.5 * (lo + hi);
    let examples = rows
        .into_iter()
        .zip(scores)
        .map(|(features, s)| {
            let p = unscaled_sigmoid(-(s + bias));
            Example { features, label: if rng.uniform() < p { 1 } else { -1 } }
        })
        .collect();
    Dataset::with_dim(examples, LabelKind::Binary, dim)
}

/// Multiclass dataset of Gaussian clusters with one random centre per class.
pub fn make_clusters(n: usize, fan_in: usize, classes: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || fan_in == 0 || classes < 2 {
        return invalid("clusters need n >= 1, fan_in >= 1 and at least two classes");
    }
    let mut rng = RandomSource::new(seed);
    let centres: Vec<Vec<f64>> = (0..classes).map(|_| (0..fan_in).map(|_| rng.standard_normal()).collect()).collect();
    let examples = (0..n)
        .map(|_| {
            let c = rng.draw_index(classes).expect("classes >= 2");
            let a: Vec<f64> = centres[c].iter().map(|m| m + 0.7 * rng.standard_normal()).collect();
            Example { features: SparseVec::from_dense(&a), label: c as i32 + 1 }
        })
        .collect();
    Dataset::with_dim(examples, LabelKind::Multiclass { classes }, fan_in)
}
