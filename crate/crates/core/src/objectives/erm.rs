use super::{FiniteSum, SnapshotCache};
use crate::data::{Dataset, LabelKind};
use crate::error::{invalid, Error, Result};
use crate::linalg::{sq_norm_slice, Operand};
use crate::losses::LossKind;

/// `f_i(x) = phi(l_i <a_i, x>) + (lambda/2) ||x||^2` over a binary dataset.
#[derive(Debug, Clone)]
pub struct ErmObjective {
    dataset: Dataset,
    loss: LossKind,
    lambda: f64,
    smoothness: f64,
}

/// `L_phi * max_i ||a_i||^2 + lambda`.
pub fn erm_smoothness(dataset: &Dataset, loss: LossKind, lambda: f64) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(loss.smoothness() * dataset.max_sq_norm() + lambda)
}

impl ErmObjective {
    pub fn new(dataset: Dataset, loss: LossKind, lambda: f64) -> Result<Self> {
        if dataset.kind() != LabelKind::Binary {
            return invalid("ERM objectives need binary labels");
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("regularization weight {lambda} must be finite and non-negative"));
        }
        let smoothness = erm_smoothness(&dataset, loss, lambda)?;
        Ok(ErmObjective { dataset, loss, lambda, smoothness })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `phi(l <a, x>)` and `phi'(l <a, x>)` for example `i`.
    fn data_term(&self, i: usize, x: &[f64]) -> (f64, f64, f64) {
        let e = &self.dataset.examples()[i];
        let l = e.label as f64;
        let eval = self.loss.eval(l * e.features.dot_unchecked(x));
        (eval.value, eval.derivative, l)
    }

    fn add_data_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let (value, deriv, l) = self.data_term(i, x);
        if deriv != 0.0 {
            self.dataset.examples()[i].features.add_scaled_into(scale * deriv * l, out);
        }
        value
    }

    fn add_regularizer(&self, x: &[f64], count: f64, scale: f64, out: &mut [f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let s = scale * count * self.lambda;
        for (o, xi) in out.iter_mut().zip(x) {
            *o += s * xi;
        }
        count * 0.5 * self.lambda * sq_norm_slice(x)
    }
}

impl FiniteSum for ErmObjective {
    fn len(&self) -> usize {
        self.dataset.len()
    }

    fn dim(&self) -> usize {
        self.dataset.dim()
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.data_term(i, x).0 + 0.5 * self.lambda * sq_norm_slice(x)
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        self.add_data_gradient(i, x, scale, out) + self.add_regularizer(x, 1.0, scale, out)
    }

    fn add_batch_gradient(&self, batch: &[usize], x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let data: f64 = batch.iter().map(|&i| self.add_data_gradient(i, x, scale, out)).sum();
        data + self.add_regularizer(x, batch.len() as f64, scale, out)
    }

    fn value_gradient_residuals(&self, x: &[f64]) -> (f64, Vec<f64>, Option<Vec<f64>>) {
        let n = self.len();
        let inv = 1.0 / n as f64;
        let mut g = vec![0.0; self.dim()];
        let mut residuals = Vec::with_capacity(n);
        let mut total = 0.0;
        for (i, e) in self.dataset.examples().iter().enumerate() {
            let (value, deriv, l) = self.data_term(i, x);
            total += value;
            residuals.push(deriv);
            if deriv != 0.0 {
                e.features.add_scaled_into(inv * deriv * l, &mut g);
            }
        }
        let reg = self.add_regularizer(x, 1.0, 1.0, &mut g);
        (total * inv + reg, g, Some(residuals))
    }

    fn add_snapshot_batch_gradient(&self, batch: &[usize], snap: &SnapshotCache, scale: f64, out: &mut [f64]) {
        let Some(res) = &snap.residuals else {
            self.add_batch_gradient(batch, snap.point.as_slice(), scale, out);
            return;
        };
        let ex = self.dataset.examples();
        for &i in batch {
            if res[i] != 0.0 {
                ex[i].features.add_scaled_into(scale * res[i] * ex[i].label as f64, out);
            }
        }
        self.add_regularizer(snap.point.as_slice(), batch.len() as f64, scale, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Example;
    use crate::linalg::{ParamVec, SparseVec};
    use crate::objectives::{build_snapshot, component, full_value_and_gradient};

    fn ds(rows: &[(&[f64], i32)]) -> Dataset {
        let ex = rows.iter().map(|(a, l)| Example { features: SparseVec::from_dense(a), label: *l }).collect();
        Dataset::with_dim(ex, LabelKind::Binary, rows[0].0.len()).unwrap()
    }

    fn pv(v: &[f64]) -> ParamVec {
        ParamVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn logistic_at_zero_margin() {
        let obj = ErmObjective::new(ds(&[(&[1.0, 0.0], 1)]), LossKind::Logistic, 0.0).unwrap();
        let (v, g) = component(&obj, 0, &pv(&[0.0, 0.0])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.as_slice(), &[-0.5, 0.0]);
    }

    #[test]
    fn flat_hinge_leaves_only_regularizer() {
        let obj = ErmObjective::new(ds(&[(&[2.0, 5.0], 1)]), LossKind::SmoothedHinge { gamma: 1.0 }, 1.0).unwrap();
        let (_, g) = component(&obj, 0, &pv(&[1.0, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn squared_at_origin() {
        for (a, l) in [(&[0.3, -2.0][..], 1), (&[1.5, 0.25][..], -1)] {
            let obj = ErmObjective::new(ds(&[(a, l)]), LossKind::Squared, 0.0).unwrap();
            let (v, g) = component(&obj, 0, &pv(&[0.0, 0.0])).unwrap();
            assert_eq!(v, 0.5);
            let expect: Vec<f64> = a.iter().map(|x| -(l as f64) * x).collect();
            assert_eq!(g.as_slice(), expect.as_slice());
        }
    }

    #[test]
    fn smoothness_formula() {
        let d = ds(&[(&[1.0, 1.0], 1)]);
        assert!((erm_smoothness(&d, LossKind::Logistic, 0.1).unwrap() - 0.6).abs() < 1e-15);
        let d = ds(&[(&[3.0, 4.0], -1)]);
        assert_eq!(erm_smoothness(&d, LossKind::Sigmoid, 0.0).unwrap(), 25.0);
        let z = Dataset::with_dim(vec![Example { features: SparseVec::empty(), label: 1 }], LabelKind::Binary, 2).unwrap();
        assert_eq!(erm_smoothness(&z, LossKind::Logistic, 0.0).unwrap(), 0.0);
        let empty = Dataset::new(vec![], LabelKind::Binary).unwrap();
        assert!(matches!(erm_smoothness(&empty, LossKind::Logistic, 0.0), Err(Error::EmptyDataset)));
        assert!(ErmObjective::new(empty, LossKind::Logistic, 0.0).is_err());
    }

    #[test]
    fn index_and_dimension_checked() {
        let obj = ErmObjective::new(ds(&[(&[1.0, 2.0], 1)]), LossKind::Logistic, 0.0).unwrap();
        assert!(matches!(component(&obj, 1, &pv(&[0.0, 0.0])), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(full_value_and_gradient(&obj, &pv(&[0.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cached_snapshot_gradients_match_direct() {
        let obj = ErmObjective::new(
            ds(&[(&[1.0, -2.0, 0.5], 1), (&[0.0, 3.0, 1.0], -1), (&[2.0, 0.0, -1.0], 1)]),
            LossKind::Sigmoid,
            0.3,
        )
        .unwrap();
        let x = pv(&[0.2, -0.1, 0.7]);
        let snap = build_snapshot(&obj, &x, true).unwrap();
        assert!(snap.is_cached());
        let (v, g) = full_value_and_gradient(&obj, &x).unwrap();
        assert!((snap.value - v).abs() <= 1e-12 * v.abs());
        for (a, b) in snap.gradient.as_slice().iter().zip(g.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        for i in 0..3 {
            let mut cached = vec![0.0; 3];
            obj.add_snapshot_batch_gradient(&[i], &snap, 1.0, &mut cached);
            let (_, direct) = component(&obj, i, &x).unwrap();
            for (a, b) in cached.iter().zip(direct.as_slice()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
        assert!(!build_snapshot(&obj, &x, false).unwrap().is_cached());
    }
}
