use super::FiniteSum;
use crate::error::{invalid, Result};
use crate::linalg::sq_norm_slice;

/// `f_i(x) = (c_i/2) ||x||^2 + <b_i, x>`, with curvatures `c_i` of either sign.
///
/// Small analytic instances for checking estimator and variance identities.
#[derive(Debug, Clone)]
pub struct QuadraticSum {
    curvatures: Vec<f64>,
    offsets: Vec<Vec<f64>>,
    dim: usize,
    smoothness: f64,
}

impl QuadraticSum {
    pub fn new(curvatures: Vec<f64>, offsets: Vec<Vec<f64>>) -> Result<Self> {
        if curvatures.is_empty() || curvatures.len() != offsets.len() {
            return invalid("need one offset per curvature and at least one component");
        }
        let dim = offsets[0].len();
        if dim == 0 || offsets.iter().any(|b| b.len() != dim) {
            return invalid("offsets must share a positive dimension");
        }
        if curvatures.iter().chain(offsets.iter().flatten()).any(|v| !v.is_finite()) {
            return invalid("non-finite coefficient");
        }
        let smoothness = curvatures.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        Ok(QuadraticSum { curvatures, offsets, dim, smoothness })
    }
}

impl FiniteSum for QuadraticSum {
    fn len(&self) -> usize {
        self.curvatures.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let lin: f64 = self.offsets[i].iter().zip(x).map(|(b, v)| b * v).sum();
        0.5 * self.curvatures[i] * sq_norm_slice(x) + lin
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let c = self.curvatures[i];
        for ((o, xi), b) in out.iter_mut().zip(x).zip(&self.offsets[i]) {
            *o += scale * (c * xi + b);
        }
        self.component_value(i, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ParamVec;
    use crate::objectives::full_value_and_gradient;

    #[test]
    fn two_component_average() {
        let q = QuadraticSum::new(vec![1.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap();
        let (v, g) = full_value_and_gradient(&q, &ParamVec::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g.as_slice(), &[1.5]);
        assert_eq!(q.smoothness(), 1.0);
    }

    #[test]
    fn rejects_shape_errors() {
        assert!(QuadraticSum::new(vec![], vec![]).is_err());
        assert!(QuadraticSum::new(vec![1.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(QuadraticSum::new(vec![1.0, 2.0], vec![vec![1.0], vec![2.0, 3.0]]).is_err());
    }
}
