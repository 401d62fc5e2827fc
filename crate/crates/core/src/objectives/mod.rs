//! Finite-sum objectives `f(x) = (1/n) Σ_i f_i(x)`.
//!
//! Components are addressed by 0-based index. The trait methods are the
//! unchecked hot path used by the optimizers; [`component`] and
//! [`full_value_and_gradient`] are the checked entry points.

mod erm;
mod net;
mod quadratic;
mod synthetic;

pub use erm::{erm_smoothness, ErmObjective};
pub use net::{net_param_len, TwoLayerNet, DEFAULT_HIDDEN};
pub use quadratic::QuadraticSum;
pub use synthetic::{make_categorical, make_clusters, make_synthetic, Synthetic};

use crate::error::{Error, Result};
use crate::linalg::ParamVec;

pub trait FiniteSum: Send + Sync {
    /// Number of components `n`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    /// Lipschitz constant shared by every component gradient.
    fn smoothness(&self) -> f64;

    fn component_value(&self, i: usize, x: &[f64]) -> f64;

    /// `out += scale * grad f_i(x)`; returns `f_i(x)`.
    fn add_component_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) -> f64;

    /// `out += scale * Σ_{i in batch} grad f_i(x)`; returns `Σ f_i(x)`.
    fn add_batch_gradient(&self, batch: &[usize], x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        batch.iter().map(|&i| self.add_component_gradient(i, x, scale, out)).sum()
    }

    /// Average value and gradient over all components.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = self.len();
        let all: Vec<usize> = (0..n).collect();
        let mut g = vec![0.0; self.dim()];
        let total = self.add_batch_gradient(&all, x, 1.0 / n as f64, &mut g);
        (total / n as f64, g)
    }

    /// Full value and gradient, plus per-component scalars from which
    /// `grad f_i(x)` can later be rebuilt without touching the data again.
    /// Objectives returning `Some` must honour them in
    /// [`FiniteSum::add_snapshot_batch_gradient`].
    fn value_gradient_residuals(&self, x: &[f64]) -> (f64, Vec<f64>, Option<Vec<f64>>) {
        let (v, g) = self.value_and_gradient(x);
        (v, g, None)
    }

    /// `out += scale * Σ_{i in batch} grad f_i(snapshot)`. The default recomputes.
    fn add_snapshot_batch_gradient(&self, batch: &[usize], snap: &SnapshotCache, scale: f64, out: &mut [f64]) {
        self.add_batch_gradient(batch, snap.point.as_slice(), scale, out);
    }
}

/// Snapshot point with its full gradient and optional cached residuals.
#[derive(Debug, Clone)]
pub struct SnapshotCache {
    pub point: ParamVec,
    pub value: f64,
    pub gradient: ParamVec,
    pub residuals: Option<Vec<f64>>,
}

impl SnapshotCache {
    /// True when component gradients at the snapshot come from the cache.
    pub fn is_cached(&self) -> bool {
        self.residuals.is_some()
    }
}

fn check_point<F: FiniteSum + ?Sized>(obj: &F, x: &ParamVec) -> Result<()> {
    if obj.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x.len() });
    }
    Ok(())
}

fn finite_pair(value: f64, grad: Vec<f64>, what: &str) -> Result<(f64, ParamVec)> {
    if !value.is_finite() {
        return Err(Error::NonFinite(what.into()));
    }
    let g = ParamVec::new(grad).map_err(|_| Error::NonFinite(what.into()))?;
    Ok((value, g))
}

/// Value and gradient of component `i` (0-based) at `x`.
pub fn component<F: FiniteSum + ?Sized>(obj: &F, i: usize, x: &ParamVec) -> Result<(f64, ParamVec)> {
    check_point(obj, x)?;
    if i >= obj.len() {
        return Err(Error::IndexOutOfRange { index: i, len: obj.len() });
    }
    let mut g = vec![0.0; obj.dim()];
    let v = obj.add_component_gradient(i, x.as_slice(), 1.0, &mut g);
    finite_pair(v, g, "component gradient")
}

/// Exact average value and gradient over all components (one data pass).
pub fn full_value_and_gradient<F: FiniteSum + ?Sized>(obj: &F, x: &ParamVec) -> Result<(f64, ParamVec)> {
    check_point(obj, x)?;
    let (v, g) = obj.value_and_gradient(x.as_slice());
    finite_pair(v, g, "full gradient")
}

/// Full gradient at `point`, keeping per-component residuals if `keep_residuals`
/// and the objective supports them.
pub fn build_snapshot<F: FiniteSum + ?Sized>(obj: &F, point: &ParamVec, keep_residuals: bool) -> Result<SnapshotCache> {
    check_point(obj, point)?;
    let (value, grad, residuals) = if keep_residuals {
        obj.value_gradient_residuals(point.as_slice())
    } else {
        let (v, g) = obj.value_and_gradient(point.as_slice());
        (v, g, None)
    };
    let (value, gradient) = finite_pair(value, grad, "snapshot gradient")?;
    Ok(SnapshotCache { point: point.clone(), value, gradient, residuals })
}
