//! Dense and sparse vector primitives.
//!
//! [`ParamVec`] is the optimization variable: a dense vector of `f64` whose
//! length is fixed at construction and whose entries are kept finite by every
//! public mutating operation. [`SparseVec`] holds a feature vector with
//! strictly increasing 0-based indices and no stored zeros. The 1-based
//! indices of the LibSVM format are converted exactly once, in
//! [`SparseVec::from_one_based`].

use crate::error::{Error, Result};

/// Dense parameter vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVec(Vec<f64>);

impl ParamVec {
    pub fn zeros(dim: usize) -> Self {
        ParamVec(vec![0.0; dim])
    }

    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {j} of parameter vector")));
        }
        Ok(ParamVec(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sq_norm(&self) -> f64 {
        sq_norm_slice(&self.0)
    }

    /// `self += alpha * u`, leaving `self` untouched if the result would not be finite.
    pub fn axpy_in_place<U: Operand + ?Sized>(&mut self, alpha: f64, u: &U) -> Result<()> {
        u.check_dim(self.len())?;
        let mut next = self.0.clone();
        u.add_scaled_into(alpha, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("axpy result".into()));
        }
        self.0 = next;
        Ok(())
    }

    /// `self -= step` for a dense step of matching length; the hot path of every optimizer.
    pub(crate) fn sub_assign_checked(&mut self, step: &[f64]) -> Result<()> {
        if step.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: step.len() });
        }
        if self.0.iter().zip(step).any(|(x, s)| !(x - s).is_finite()) {
            return Err(Error::NonFinite("iterate update".into()));
        }
        for (x, s) in self.0.iter_mut().zip(step) {
            *x -= s;
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ParamVec {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        ParamVec::new(values)
    }
}

impl AsRef<[f64]> for ParamVec {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Sparse feature vector: `(index, value)` pairs, 0-based, strictly increasing, no zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn empty() -> Self {
        SparseVec::default()
    }

    /// Builds from 1-based `(index, value)` pairs as they appear in LibSVM files.
    /// Zero values are dropped; indices must be `>= 1` and strictly increasing.
    pub fn from_one_based(pairs: &[(u32, f64)]) -> Result<Self> {
        let mut out = SparseVec::default();
        let mut prev = 0u32;
        for &(idx, val) in pairs {
            if idx == 0 {
                return Err(Error::InvalidArgument("feature index 0 (indices are 1-based)".into()));
            }
            if idx <= prev {
                return Err(Error::InvalidArgument(format!(
                    "feature indices not strictly increasing ({prev} then {idx})"
                )));
            }
            if !val.is_finite() {
                return Err(Error::NonFinite(format!("feature {idx}")));
            }
            prev = idx;
            if val != 0.0 {
                out.indices.push(idx - 1);
                out.values.push(val);
            }
        }
        Ok(out)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let mut out = SparseVec::default();
        for (j, &v) in values.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(j as u32);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pairs with 0-based indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&j| j as usize).zip(self.values.iter().copied())
    }

    /// Pairs with 1-based indices, for writing LibSVM.
    pub fn one_based(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().map(|&j| j + 1).zip(self.values.iter().copied())
    }

    /// Smallest dense dimension that can hold this vector.
    pub fn required_dim(&self) -> usize {
        self.indices.last().map_or(0, |&j| j as usize + 1)
    }

    pub fn sq_norm(&self) -> f64 {
        sq_norm_slice(&self.values)
    }

    pub fn to_dense(&self, dim: usize) -> Result<Vec<f64>> {
        self.check_dim(dim)?;
        let mut out = vec![0.0; dim];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        Ok(out)
    }
}

/// Left-hand operands of [`dot`] and [`axpy`].
pub trait Operand {
    /// Errors unless the operand fits a dense vector of length `dim`.
    fn check_dim(&self, dim: usize) -> Result<()>;
    /// Unchecked inner product with `v`.
    fn dot_unchecked(&self, v: &[f64]) -> f64;
    /// Unchecked `out += alpha * self`.
    fn add_scaled_into(&self, alpha: f64, out: &mut [f64]);
}

impl Operand for [f64] {
    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.len() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, found: self.len() })
        }
    }
    fn dot_unchecked(&self, v: &[f64]) -> f64 {
        self.iter().zip(v).map(|(a, b)| a * b).sum()
    }
    fn add_scaled_into(&self, alpha: f64, out: &mut [f64]) {
        for (o, u) in out.iter_mut().zip(self) {
            *o += alpha * u;
        }
    }
}

impl Operand for ParamVec {
    fn check_dim(&self, dim: usize) -> Result<()> {
        self.0.check_dim(dim)
    }
    fn dot_unchecked(&self, v: &[f64]) -> f64 {
        self.0.dot_unchecked(v)
    }
    fn add_scaled_into(&self, alpha: f64, out: &mut [f64]) {
        self.0.add_scaled_into(alpha, out)
    }
}

impl Operand for SparseVec {
    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.required_dim() <= dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, found: self.required_dim() })
        }
    }
    fn dot_unchecked(&self, v: &[f64]) -> f64 {
        self.iter().map(|(j, a)| a * v[j]).sum()
    }
    fn add_scaled_into(&self, alpha: f64, out: &mut [f64]) {
        for (j, a) in self.iter() {
            out[j] += alpha * a;
        }
    }
}

/// `Σ_j u_j v_j`.
pub fn dot<U: Operand + ?Sized>(u: &U, v: &ParamVec) -> Result<f64> {
    u.check_dim(v.len())?;
    Ok(u.dot_unchecked(v.as_slice()))
}

/// Returns `v + alpha * u`; `v` is not modified.
pub fn axpy<U: Operand + ?Sized>(alpha: f64, u: &U, v: &ParamVec) -> Result<ParamVec> {
    let mut out = v.clone();
    out.axpy_in_place(alpha, u)?;
    Ok(out)
}

pub fn sq_norm(v: &ParamVec) -> f64 {
    v.sq_norm()
}

pub(crate) fn sq_norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ParamVec {
        ParamVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&pv(&[1.0, 2.0]), &pv(&[3.0, 4.0])).unwrap(), 11.0);
        let s = SparseVec::from_one_based(&[(2, 5.0)]).unwrap();
        assert_eq!(dot(&s, &pv(&[7.0, 9.0])).unwrap(), 45.0);
        assert_eq!(dot(&pv(&[0.0, 0.0]), &pv(&[-3.5, 8.25])).unwrap(), 0.0);
    }

    #[test]
    fn dot_dimension_mismatch() {
        assert!(matches!(
            dot(&pv(&[1.0, 2.0, 3.0]), &pv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        let s = SparseVec::from_one_based(&[(3, 1.0)]).unwrap();
        assert!(dot(&s, &pv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn axpy_examples() {
        let r = axpy(-0.1, &pv(&[10.0, 0.0]), &pv(&[1.0, 1.0])).unwrap();
        assert!((r.as_slice()[0]).abs() < 1e-15);
        assert_eq!(r.as_slice()[1], 1.0);

        let v = pv(&[0.3, -2.0]);
        assert_eq!(axpy(0.0, &pv(&[5.0, 6.0]), &v).unwrap(), v);

        let s = SparseVec::from_one_based(&[(1, 2.0)]).unwrap();
        assert_eq!(axpy(1.0, &s, &ParamVec::zeros(3)).unwrap().as_slice(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn axpy_rejects_overflow_and_keeps_input() {
        let mut v = pv(&[f64::MAX, 1.0]);
        let before = v.clone();
        assert!(v.axpy_in_place(10.0, &pv(&[f64::MAX, 0.0])).is_err());
        assert_eq!(v, before);
    }

    #[test]
    fn sq_norm_examples() {
        assert_eq!(sq_norm(&pv(&[3.0, 4.0])), 25.0);
        assert_eq!(sq_norm(&ParamVec::zeros(7)), 0.0);
        assert_eq!(sq_norm(&pv(&[1.0; 4])), 4.0);
    }

    #[test]
    fn new_rejects_nan() {
        assert!(ParamVec::new(vec![0.0, f64::NAN]).is_err());
        assert!(ParamVec::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn sparse_invariants() {
        assert!(SparseVec::from_one_based(&[(0, 1.0)]).is_err());
        assert!(SparseVec::from_one_based(&[(3, 1.0), (3, 2.0)]).is_err());
        assert!(SparseVec::from_one_based(&[(3, 1.0), (2, 2.0)]).is_err());
        let s = SparseVec::from_one_based(&[(1, 0.0), (4, 2.5)]).unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(3, 2.5)]);
        assert_eq!(s.one_based().collect::<Vec<_>>(), vec![(4, 2.5)]);
        assert_eq!(s.required_dim(), 4);
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..16).prop_flat_map(|d| {
            (
                prop::collection::vec(-1e3f64..1e3, d),
                prop::collection::vec(-1e3f64..1e3, d),
                -1e2f64..1e2,
            )
        })
    }

    proptest! {
        #[test]
        fn axpy_inverse_round_trip((u, v, alpha) in vec_pair()) {
            let (u, v) = (pv(&u), pv(&v));
            let there = axpy(alpha, &u, &v).unwrap();
            let back = axpy(-alpha, &u, &there).unwrap();
            for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
                // Relative to the magnitudes involved in the intermediate sum.
                let scale = b.abs().max(1.0) + (alpha.abs() * u.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs())));
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn sq_norm_equals_self_dot(v in prop::collection::vec(-1e6f64..1e6, 0..32)) {
            let v = pv(&v);
            prop_assert_eq!(sq_norm(&v), dot(&v, &v).unwrap());
        }
    }
}
