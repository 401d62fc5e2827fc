//! Scalar margin losses `phi(t)` with first derivatives and smoothness constants.
//!
//! All evaluations stay finite on the whole real line: exponentials are only
//! ever taken of non-positive arguments.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Scale applied to `1/(1+e^t)` so the sigmoid loss has smoothness exactly 1.
///
/// `max |d^2/dt^2 1/(1+e^t)| = 1/(6 sqrt 3)`, attained where the logistic
/// function equals `(3 ± sqrt 3)/6`.
pub const SIGMOID_SCALE: f64 = 10.392304845413264;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `c/(1+e^t)`, with `c = SIGMOID_SCALE`.
    Sigmoid,
    /// `log(1+e^{-t})`.
    Logistic,
    /// `(1-t)^2/2`.
    Squared,
    /// Huberized hinge with smoothing width `gamma > 0`.
    SmoothedHinge { gamma: f64 },
    /// `log(1+e^t)`, used as the hidden activation of the network.
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub derivative: f64,
}

/// `1/(1+e^t)` evaluated without overflow.
pub fn unscaled_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `log(1+e^t)` evaluated without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Derivative of [`softplus`], i.e. the logistic function `1/(1+e^{-t})`.
pub fn softplus_derivative(t: f64) -> f64 {
    unscaled_sigmoid(-t)
}

impl LossKind {
    pub fn smoothed_hinge(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(LossKind::SmoothedHinge { gamma })
        } else {
            invalid(format!("hinge smoothing must be positive and finite, got {gamma}"))
        }
    }

    pub fn eval(&self, t: f64) -> LossEval {
        match *self {
            LossKind::Sigmoid => {
                let s = unscaled_sigmoid(t);
                let one_minus = unscaled_sigmoid(-t);
                LossEval { value: SIGMOID_SCALE * s, derivative: -SIGMOID_SCALE * s * one_minus }
            }
            LossKind::Logistic => LossEval { value: softplus(-t), derivative: -unscaled_sigmoid(t) },
            LossKind::Squared => LossEval { value: 0.5 * (1.0 - t) * (1.0 - t), derivative: t - 1.0 },
            LossKind::SmoothedHinge { gamma } => {
                if t >= 1.0 {
                    LossEval { value: 0.0, derivative: 0.0 }
                } else if t >= 1.0 - gamma {
                    let u = 1.0 - t;
                    LossEval { value: u * u / (2.0 * gamma), derivative: -u / gamma }
                } else {
                    LossEval { value: 1.0 - t - 0.5 * gamma, derivative: -1.0 }
                }
            }
            LossKind::Softplus => LossEval { value: softplus(t), derivative: softplus_derivative(t) },
        }
    }

    /// Global Lipschitz constant of `phi'`.
    pub fn smoothness(&self) -> f64 {
        match *self {
            LossKind::Sigmoid => 1.0,
            LossKind::Logistic | LossKind::Softplus => 0.25,
            LossKind::Squared => 1.0,
            LossKind::SmoothedHinge { gamma } => 1.0 / gamma,
        }
    }

    /// The six ERM losses used in the benchmark grid.
    pub fn benchmark_set() -> [LossKind; 6] {
        [
            LossKind::Sigmoid,
            LossKind::Logistic,
            LossKind::Squared,
            LossKind::SmoothedHinge { gamma: 0.01 },
            LossKind::SmoothedHinge { gamma: 0.1 },
            LossKind::SmoothedHinge { gamma: 1.0 },
        ]
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Sigmoid => f.write_str("sigmoid"),
            LossKind::Logistic => f.write_str("logistic"),
            LossKind::Squared => f.write_str("squared"),
            LossKind::SmoothedHinge { gamma } => write!(f, "hinge:{gamma}"),
            LossKind::Softplus => f.write_str("softplus"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigmoid" => Ok(LossKind::Sigmoid),
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            "softplus" => Ok(LossKind::Softplus),
            other => match other.strip_prefix("hinge:") {
                Some(g) => {
                    let gamma: f64 = g
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad hinge smoothing '{g}'")))?;
                    LossKind::smoothed_hinge(gamma)
                }
                None => invalid(format!("unknown loss '{other}'")),
            },
        }
    }
}
