use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::linalg::ParamVec;

/// Default AdaGrad regularizer inside the square root.
pub const ADAGRAD_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `alpha * (1 + k/n)^{-exponent}` when `decay`, else `alpha * (1 + k/n)^{exponent}`.
    Polynomial { alpha: f64, exponent: f64, decay: bool },
    /// Per-coordinate `alpha / sqrt(G + delta)` with `G` the running sum of squared gradients.
    AdaGrad { alpha: f64, delta: f64 },
}

impl LearningRate {
    pub fn polynomial(alpha: f64, exponent: f64) -> Self {
        LearningRate::Polynomial { alpha, exponent, decay: true }
    }

    pub fn adagrad(alpha: f64) -> Self {
        LearningRate::AdaGrad { alpha, delta: ADAGRAD_DELTA }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LearningRate::Constant(eta) => eta > 0.0 && eta.is_finite(),
            LearningRate::Polynomial { alpha, exponent, .. } => alpha > 0.0 && alpha.is_finite() && exponent.is_finite(),
            LearningRate::AdaGrad { alpha, delta } => alpha > 0.0 && alpha.is_finite() && delta >= 0.0 && delta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid learning rate {self}"))
        }
    }

    /// Scalar step at iteration `k` (0-based) for `n` components; `None` for AdaGrad.
    pub fn scalar(&self, k: u64, n: usize) -> Option<f64> {
        match *self {
            LearningRate::Constant(eta) => Some(eta),
            LearningRate::Polynomial { alpha, exponent, decay } => {
                let base = 1.0 + k as f64 / n as f64;
                Some(alpha * base.powf(if decay { -exponent } else { exponent }))
            }
            LearningRate::AdaGrad { .. } => None,
        }
    }
}

impl fmt::Display for LearningRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearningRate::Constant(eta) => write!(f, "constant({eta})"),
            LearningRate::Polynomial { alpha, exponent, decay } => {
                write!(f, "polynomial(alpha={alpha}, exponent={}{exponent})", if *decay { "-" } else { "+" })
            }
            LearningRate::AdaGrad { alpha, delta } => write!(f, "adagrad(alpha={alpha}, delta={delta})"),
        }
    }
}

/// Running per-coordinate sum of squared gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    accumulator: Vec<f64>,
}

impl AdaGradState {
    pub fn new(dim: usize) -> Self {
        AdaGradState { accumulator: vec![0.0; dim] }
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accumulator
    }

    /// Adds `g * g` to the accumulator and overwrites `g` with the step
    /// `alpha * g / sqrt(G + delta)`. Zero gradient coordinates give zero steps.
    pub(crate) fn step_in_place(&mut self, g: &mut [f64], alpha: f64, delta: f64) {
        for (gj, acc) in g.iter_mut().zip(self.accumulator.iter_mut()) {
            if *gj == 0.0 {
                continue;
            }
            *acc += *gj * *gj;
            *gj *= alpha / (*acc + delta).sqrt();
        }
    }
}

/// One AdaGrad update: returns the step vector to subtract from the iterate.
pub fn adagrad_step(state: &mut AdaGradState, g: &ParamVec, alpha: f64, delta: f64) -> Result<ParamVec> {
    if g.len() != state.accumulator.len() {
        return Err(Error::DimensionMismatch { expected: state.accumulator.len(), found: g.len() });
    }
    let mut step = g.as_slice().to_vec();
    state.step_in_place(&mut step, alpha, delta);
    ParamVec::new(step)
}

/// Applies `x <- x - step(g)` under a learning rate, holding AdaGrad state if needed.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    lr: LearningRate,
    ada: Option<AdaGradState>,
    n: usize,
}

impl Stepper {
    pub(crate) fn new(lr: LearningRate, dim: usize, n: usize) -> Result<Self> {
        lr.validate()?;
        let ada = matches!(lr, LearningRate::AdaGrad { .. }).then(|| AdaGradState::new(dim));
        Ok(Stepper { lr, ada, n })
    }

    /// Consumes `g` as scratch space.
    pub(crate) fn apply(&mut self, x: &mut ParamVec, g: &mut [f64], k: u64) -> Result<()> {
        match (self.lr, &mut self.ada) {
            (LearningRate::AdaGrad { alpha, delta }, Some(state)) => state.step_in_place(g, alpha, delta),
            (lr, _) => {
                let eta = lr.scalar(k, self.n).expect("scalar rate");
                g.iter_mut().for_each(|v| *v *= eta);
            }
        }
        x.sub_assign_checked(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_decay() {
        let lr = LearningRate::polynomial(0.1, 0.5);
        assert!((lr.scalar(100, 100).unwrap() - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lr.scalar(0, 100).unwrap(), 0.1);
        let grow = LearningRate::Polynomial { alpha: 0.1, exponent: 0.5, decay: false };
        assert!((grow.scalar(100, 100).unwrap() - 0.1 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn adagrad_examples() {
        let mut st = AdaGradState::new(2);
        let step = adagrad_step(&mut st, &ParamVec::new(vec![3.0, 4.0]).unwrap(), 1.0, 0.0).unwrap();
        assert_eq!(step.as_slice(), &[1.0, 1.0]);
        let before = st.accumulator().to_vec();
        let step = adagrad_step(&mut st, &ParamVec::zeros(2), 1.0, 0.0).unwrap();
        assert_eq!(step.as_slice(), &[0.0, 0.0]);
        assert_eq!(st.accumulator(), before.as_slice());
        assert!(adagrad_step(&mut st, &ParamVec::zeros(3), 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(LearningRate::Constant(0.0).validate().is_err());
        assert!(LearningRate::adagrad(-1.0).validate().is_err());
        assert!(LearningRate::polynomial(0.1, f64::NAN).validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn accumulator_non_decreasing(gs in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 1..20)) {
            let mut st = AdaGradState::new(3);
            let mut prev = st.accumulator().to_vec();
            for g in gs {
                adagrad_step(&mut st, &ParamVec::new(g).unwrap(), 0.5, ADAGRAD_DELTA).unwrap();
                proptest::prop_assert!(st.accumulator().iter().zip(&prev).all(|(a, b)| a >= b));
                prev = st.accumulator().to_vec();
            }
        }
    }
}
