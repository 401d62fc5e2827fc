use super::FiniteSum;
use crate::data::{Dataset, LabelKind};
use crate::error::{invalid, Result};
use crate::linalg::{sq_norm_slice, ParamVec, SparseVec};
use crate::losses::{softplus, softplus_derivative};
use crate::rng::RandomSource;
use crate::verify::smoothness_probe;

/// Number of parameters of a `fan_in -> hidden -> classes` network with biases.
pub fn net_param_len(fan_in: usize, hidden: usize, classes: usize) -> usize {
    hidden * (fan_in + 1) + classes * (hidden + 1)
}

/// Softplus hidden layer, linear output layer and softmax cross-entropy,
/// with `(lambda/2) ||theta||^2` over every parameter including biases.
///
/// Parameters are laid out as `W1` (row-major, `hidden x fan_in`), `b1`,
/// `W2` (row-major, `classes x hidden`), `b2`. Dataset labels are the class
/// numbers `1..=classes`.
#[derive(Debug, Clone)]
pub struct TwoLayerNet {
    dataset: Dataset,
    fan_in: usize,
    hidden: usize,
    classes: usize,
    /// Optional `hidden x fan_in` connectivity for the first layer.
    mask: Option<Vec<bool>>,
    lambda: f64,
    smoothness: f64,
}

/// Default hidden-layer width.
pub const DEFAULT_HIDDEN: usize = 64;

const PROBE_TRIALS: usize = 32;
const PROBE_SCALE: f64 = 0.5;

impl TwoLayerNet {
    /// Builds the network objective. The smoothness constant is estimated by
    /// probing random parameter pairs and is only a heuristic; override it
    /// with [`TwoLayerNet::with_smoothness`] when a better value is known.
    pub fn new(dataset: Dataset, hidden: usize, lambda: f64) -> Result<Self> {
        let LabelKind::Multiclass { classes } = dataset.kind() else {
            return invalid("network objectives need a multiclass dataset");
        };
        if dataset.is_empty() {
            return Err(crate::error::Error::EmptyDataset);
        }
        if hidden == 0 || dataset.dim() == 0 {
            return invalid("network layers must be non-empty");
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("regularization weight {lambda} must be finite and non-negative"));
        }
        let fan_in = dataset.dim();
        let mut net = TwoLayerNet { dataset, fan_in, hidden, classes, mask: None, lambda, smoothness: 1.0 };
        net.smoothness = net.estimate_smoothness(PROBE_TRIALS, PROBE_SCALE, &mut RandomSource::new(0))?;
        Ok(net)
    }

    /// Restricts first-layer connectivity; masked weights never influence the output.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.hidden * self.fan_in {
            return invalid(format!("mask has {} entries, expected {}", mask.len(), self.hidden * self.fan_in));
        }
        self.mask = Some(mask);
        self.smoothness = self.estimate_smoothness(PROBE_TRIALS, PROBE_SCALE, &mut RandomSource::new(0))?;
        Ok(self)
    }

    pub fn with_smoothness(mut self, smoothness: f64) -> Result<Self> {
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return invalid(format!("smoothness {smoothness} must be positive"));
        }
        self.smoothness = smoothness;
        Ok(self)
    }

    /// Largest gradient-difference ratio seen over `trials` random pairs.
    pub fn estimate_smoothness(&self, trials: usize, scale: f64, rng: &mut RandomSource) -> Result<f64> {
        let ratio = smoothness_probe(self, trials, scale, rng)?;
        Ok(ratio.max(self.lambda).max(f64::MIN_POSITIVE))
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn param_len(&self) -> usize {
        net_param_len(self.fan_in, self.hidden, self.classes)
    }

    /// Random starting point: Gaussian weights scaled by `1/sqrt(fan_in)` per layer, zero biases.
    pub fn init_params(&self, rng: &mut RandomSource) -> ParamVec {
        let mut p = vec![0.0; self.param_len()];
        let (w1, rest) = p.split_at_mut(self.hidden * self.fan_in);
        let s1 = 1.0 / (self.fan_in as f64).sqrt();
        for (k, w) in w1.iter_mut().enumerate() {
            if self.connected(k) {
                *w = s1 * rng.standard_normal();
            }
        }
        let s2 = 1.0 / (self.hidden as f64).sqrt();
        let w2 = &mut rest[self.hidden..self.hidden + self.classes * self.hidden];
        for w in w2 {
            *w = s2 * rng.standard_normal();
        }
        ParamVec::new(p).expect("finite initialization")
    }

    fn connected(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.fan_in;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        (b1, w2, b2)
    }

    /// Hidden pre-activations, hidden activations and output logits.
    fn forward(&self, features: &SparseVec, theta: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let mut z1 = theta[o_b1..o_w2].to_vec();
        for (h, z) in z1.iter_mut().enumerate() {
            let row = h * self.fan_in;
            for (j, a) in features.iter() {
                if self.connected(row + j) {
                    *z += theta[row + j] * a;
                }
            }
        }
        let act: Vec<f64> = z1.iter().map(|&z| softplus(z)).collect();
        let mut z2 = theta[o_b2..o_b2 + self.classes].to_vec();
        for (c, z) in z2.iter_mut().enumerate() {
            let row = &theta[o_w2 + c * self.hidden..o_w2 + (c + 1) * self.hidden];
            *z += row.iter().zip(&act).map(|(w, h)| w * h).sum::<f64>();
        }
        (z1, act, z2)
    }

    /// Predicted class (`1..=classes`, lowest on ties) for a feature vector.
    pub fn predict(&self, features: &SparseVec, theta: &[f64]) -> Result<i32> {
        if theta.len() != self.param_len() {
            return Err(crate::error::Error::DimensionMismatch { expected: self.param_len(), found: theta.len() });
        }
        if features.required_dim() > self.fan_in {
            return Err(crate::error::Error::DimensionMismatch { expected: self.fan_in, found: features.required_dim() });
        }
        let (_, _, z2) = self.forward(features, theta);
        let mut best = 0;
        for (c, z) in z2.iter().enumerate() {
            if *z > z2[best] {
                best = c;
            }
        }
        Ok(best as i32 + 1)
    }

    /// Cross-entropy of example `i`; if `grad` is given, adds `scale` times its gradient.
    fn data_term(&self, i: usize, theta: &[f64], grad: Option<(f64, &mut [f64])>) -> f64 {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let e = &self.dataset.examples()[i];
        let target = e.label as usize - 1;
        let (z1, act, z2) = self.forward(&e.features, theta);
        let zmax = z2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z2.iter().map(|z| (z - zmax).exp()).sum();
        let log_norm = zmax + sum_exp.ln();
        let value = log_norm - z2[target];

        if let Some((scale, out)) = grad {
            let delta2: Vec<f64> = z2
                .iter()
                .enumerate()
                .map(|(c, z)| (z - log_norm).exp() - if c == target { 1.0 } else { 0.0 })
                .collect();
            let mut delta_h = vec![0.0; self.hidden];
            for (c, d) in delta2.iter().enumerate() {
                let base = o_w2 + c * self.hidden;
                for h in 0..self.hidden {
                    delta_h[h] += theta[base + h] * d;
                    out[base + h] += scale * d * act[h];
                }
                out[o_b2 + c] += scale * d;
            }
            for h in 0..self.hidden {
                let d1 = delta_h[h] * softplus_derivative(z1[h]);
                if d1 == 0.0 {
                    continue;
                }
                out[o_b1 + h] += scale * d1;
                let row = h * self.fan_in;
                for (j, a) in e.features.iter() {
                    if self.connected(row + j) {
                        out[row + j] += scale * d1 * a;
                    }
                }
            }
        }
        value
    }

    fn add_regularizer(&self, theta: &[f64], count: f64, scale: f64, out: &mut [f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let s = scale * count * self.lambda;
        for (o, t) in out.iter_mut().zip(theta) {
            *o += s * t;
        }
        count * 0.5 * self.lambda * sq_norm_slice(theta)
    }
}

impl FiniteSum for TwoLayerNet {
    fn len(&self) -> usize {
        self.dataset.len()
    }

    fn dim(&self) -> usize {
        self.param_len()
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.data_term(i, x, None) + 0.5 * self.lambda * sq_norm_slice(x)
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        self.data_term(i, x, Some((scale, &mut *out))) + self.add_regularizer(x, 1.0, scale, out)
    }

    fn add_batch_gradient(&self, batch: &[usize], x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let data: f64 = batch.iter().map(|&i| self.data_term(i, x, Some((scale, &mut *out)))).sum();
        data + self.add_regularizer(x, batch.len() as f64, scale, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Example;
    use crate::linalg::SparseVec;
    use crate::objectives::component;
    use std::f64::consts::LN_2;

    fn tiny(classes: usize, rows: &[(&[f64], i32)], fan_in: usize) -> Dataset {
        let ex = rows.iter().map(|(a, l)| Example { features: SparseVec::from_dense(a), label: *l }).collect();
        Dataset::with_dim(ex, LabelKind::Multiclass { classes }, fan_in).unwrap()
    }

    #[test]
    fn parameter_count() {
        assert_eq!(net_param_len(3, 4, 2), 4 * 4 + 2 * 5);
        assert_eq!(net_param_len(784, DEFAULT_HIDDEN, 10), 64 * 785 + 10 * 65);
    }

    #[test]
    fn zero_params_give_log_classes() {
        for classes in [2usize, 10] {
            let net = TwoLayerNet::new(tiny(classes, &[(&[0.5, -1.0, 2.0], 1), (&[1.0, 0.0, 0.0], 2)], 3), 4, 0.0).unwrap();
            let zero = ParamVec::zeros(net.param_len());
            for i in 0..2 {
                let (v, _) = component(&net, i, &zero).unwrap();
                assert!((v - (classes as f64).ln()).abs() < 1e-14);
            }
        }
        let net = TwoLayerNet::new(tiny(2, &[(&[1.0], 2)], 1), 4, 0.0).unwrap();
        assert!((component(&net, 0, &ParamVec::zeros(net.param_len())).unwrap().0 - LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_features_zero_params_gradient() {
        // Upstream error into the hidden layer is W2^T delta = 0, so W1 and b1 get nothing;
        // the output layer still sees the softmax error times softplus(0) = ln 2.
        let classes = 3;
        let net = TwoLayerNet::new(tiny(classes, &[(&[0.0, 0.0], 2)], 2), 4, 0.7).unwrap();
        let (_, g) = component(&net, 0, &ParamVec::zeros(net.param_len())).unwrap();
        let g = g.as_slice();
        let (o_b1, o_w2, o_b2) = net.offsets();
        assert!(g[..o_w2].iter().all(|v| *v == 0.0));
        for c in 0..classes {
            let delta = 1.0 / classes as f64 - if c == 1 { 1.0 } else { 0.0 };
            assert!((g[o_b2 + c] - delta).abs() < 1e-15);
            for h in 0..4 {
                assert!((g[o_w2 + c * 4 + h] - delta * LN_2).abs() < 1e-15);
            }
        }
        assert_eq!(o_b1, 8);
    }

    #[test]
    fn masked_weights_are_inert() {
        let ds = tiny(2, &[(&[1.0, 2.0, 3.0], 1)], 3);
        let mut mask = vec![true; 12];
        mask[4] = false;
        let net = TwoLayerNet::new(ds, 4, 0.0).unwrap().with_mask(mask).unwrap();
        let mut theta = net.init_params(&mut RandomSource::new(1)).into_inner();
        let base = net.component_value(0, &theta);
        theta[4] = 123.0;
        assert_eq!(net.component_value(0, &theta), base);
        let mut g = vec![0.0; net.param_len()];
        net.add_component_gradient(0, &theta, 1.0, &mut g);
        assert_eq!(g[4], 0.0);
    }

    #[test]
    fn predict_picks_largest_logit() {
        let ds = tiny(3, &[(&[1.0, 0.0], 1), (&[0.0, 1.0], 3)], 2);
        let net = TwoLayerNet::new(ds, 2, 0.0).unwrap();
        let mut theta = vec![0.0; net.param_len()];
        let (_, _, o_b2) = net.offsets();
        assert_eq!(net.predict(&SparseVec::from_dense(&[1.0, 2.0]), &theta).unwrap(), 1);
        theta[o_b2 + 2] = 1.0;
        assert_eq!(net.predict(&SparseVec::from_dense(&[1.0, 2.0]), &theta).unwrap(), 3);
        assert!(net.predict(&SparseVec::from_dense(&[1.0, 2.0, 3.0]), &theta).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let bin = Dataset::new(vec![Example { features: SparseVec::empty(), label: 1 }], LabelKind::Binary).unwrap();
        assert!(TwoLayerNet::new(bin, 4, 0.0).is_err());
        let ds = tiny(2, &[(&[1.0], 1)], 1);
        assert!(TwoLayerNet::new(ds.clone(), 0, 0.0).is_err());
        assert!(TwoLayerNet::new(ds, 2, 0.0).unwrap().with_mask(vec![true]).is_err());
    }
}
