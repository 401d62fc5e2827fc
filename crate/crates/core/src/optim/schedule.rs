use crate::error::{invalid, Result};

/// `[beta_0, ..., beta_{m0-1}]` with `beta_t = (1 + 1/m0)^{-t}`.
pub fn beta_weights(m0: usize) -> Result<Vec<f64>> {
    if m0 == 0 {
        return invalid("sub-epoch length must be positive");
    }
    let log_ratio = (1.0 / m0 as f64).ln_1p();
    Ok((0..m0).map(|t| (-(t as f64) * log_ratio).exp()).collect())
}

/// Epoch-end sampling weights; entry `j` is the weight of ending the epoch at `m - j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndWeights {
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Entry 0 (end at `m`) gets `beta_{m0-1}`; entry `j >= 1` (end at `m - j`)
/// gets `(10/9) Σ_{t=m0-j}^{m0-1} beta_t`.
pub fn epoch_end_weights(m0: usize, betas: &[f64]) -> Result<EndWeights> {
    if m0 == 0 || betas.len() != m0 {
        return invalid(format!("expected {m0} beta weights, got {}", betas.len()));
    }
    let mut weights = Vec::with_capacity(m0);
    weights.push(betas[m0 - 1]);
    let mut tail = 0.0;
    for j in 1..m0 {
        tail += betas[m0 - j];
        weights.push(10.0 / 9.0 * tail);
    }
    let total: f64 = weights.iter().sum();
    let probabilities = weights.iter().map(|w| w / total).collect();
    Ok(EndWeights { weights, probabilities })
}

/// Epoch structure and step length for the SVRG methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgSchedule {
    /// Inner iterations per epoch.
    pub m: usize,
    /// Sub-epoch length; divides `m`.
    pub m0: usize,
    /// `m / m0`.
    pub d_sub: usize,
    pub eta: f64,
    pub betas: Vec<f64>,
    pub end: EndWeights,
    /// Whether `m0^3 >= 54 m^2`, the condition the convergence guarantee needs.
    pub theory_ok: bool,
}

/// Smallest integer `k` with `k^3 >= 54 m^2`.
pub fn min_sub_epoch(m: usize) -> usize {
    let target = 54u128 * (m as u128) * (m as u128);
    let mut k = (target as f64).cbrt().floor() as u128;
    while k > 0 && (k - 1).pow(3) >= target {
        k -= 1;
    }
    while k.pow(3) < target {
        k += 1;
    }
    k as usize
}

fn theory_condition(m: usize, m0: usize) -> bool {
    (m0 as u128).pow(3) >= 54 * (m as u128) * (m as u128)
}

impl SvrgSchedule {
    /// Theory-backed parameters: `m = n` (or `m_override`), `m0` the smallest
    /// admissible sub-epoch rounded so that it divides `m`, and `eta = 1/(m0 L)`.
    pub fn theory(n: usize, smoothness: f64, m_override: Option<usize>) -> Result<Self> {
        if n == 0 {
            return invalid("need at least one component");
        }
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return invalid(format!("smoothness {smoothness} must be positive and finite"));
        }
        let mut m = m_override.unwrap_or(n);
        if m == 0 {
            return invalid("epoch length must be positive");
        }
        let star = min_sub_epoch(m);
        let m0 = if star >= m {
            m
        } else {
            let d_sub = m / star;
            let m0 = m.div_ceil(d_sub);
            m = d_sub * m0;
            m0
        };
        let theory_ok = theory_condition(m, m0);
        if !theory_ok {
            log::warn!("epoch length {m} too short for m0^3 >= 54 m^2; running with m0 = {m0} anyway");
        }
        Self::assemble(m, m0, 1.0 / (m0 as f64 * smoothness), theory_ok)
    }

    /// Explicit epoch and sub-epoch lengths with a given step.
    pub fn new(m: usize, m0: usize, eta: f64) -> Result<Self> {
        if m == 0 || m0 == 0 || m % m0 != 0 {
            return invalid(format!("sub-epoch length {m0} must divide epoch length {m}"));
        }
        Self::assemble(m, m0, eta, theory_condition(m, m0))
    }

    /// Same epoch structure with a different step length.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return invalid(format!("step {eta} must be positive and finite"));
        }
        self.eta = eta;
        Ok(self)
    }

    fn assemble(m: usize, m0: usize, eta: f64, theory_ok: bool) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return invalid(format!("step {eta} must be positive and finite"));
        }
        let betas = beta_weights(m0)?;
        let end = epoch_end_weights(m0, &betas)?;
        Ok(SvrgSchedule { m, m0, d_sub: m / m0, eta, betas, end, theory_ok })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_weights(1).unwrap(), vec![1.0]);
        assert!(close(&beta_weights(2).unwrap(), &[1.0, 2.0 / 3.0], 1e-15));
        assert!(close(&beta_weights(4).unwrap(), &[1.0, 0.8, 0.64, 0.512], 1e-15));
        assert!(beta_weights(0).is_err());
    }

    #[test]
    fn end_weight_examples() {
        let w = epoch_end_weights(1, &[1.0]).unwrap();
        assert_eq!((w.weights, w.probabilities), (vec![1.0], vec![1.0]));
        let w = epoch_end_weights(2, &beta_weights(2).unwrap()).unwrap();
        assert!(close(&w.weights, &[2.0 / 3.0, 20.0 / 27.0], 1e-15));
        assert!(close(&w.probabilities, &[9.0 / 19.0, 10.0 / 19.0], 1e-15));
        let w = epoch_end_weights(3, &beta_weights(3).unwrap()).unwrap();
        assert!(close(&w.weights, &[0.5625, 0.625, 1.4583333333333333], 1e-12));
        assert!(close(&w.probabilities, &[0.21260, 0.23622, 0.55118], 5e-6));
        assert!(epoch_end_weights(3, &[1.0]).is_err());
    }

    #[test]
    fn sub_epoch_search() {
        assert_eq!(min_sub_epoch(1000), 378);
        assert!(377u64.pow(3) < 54_000_000 && 378u64.pow(3) >= 54_000_000);
        assert_eq!(min_sub_epoch(2000), 600);
        assert_eq!(min_sub_epoch(8), 16);
    }

    #[test]
    fn theory_examples() {
        let s = SvrgSchedule::theory(1000, 1.0, None).unwrap();
        assert_eq!((s.m, s.m0, s.d_sub, s.theory_ok), (1000, 500, 2, true));
        assert!((s.eta - 1.0 / 500.0).abs() < 1e-18);

        let s = SvrgSchedule::theory(8, 2.0, None).unwrap();
        assert_eq!((s.m, s.m0, s.d_sub, s.theory_ok), (8, 8, 1, false));
        assert_eq!(s.eta, 1.0 / 16.0);

        let s = SvrgSchedule::theory(1000, 1.0, Some(2000)).unwrap();
        assert_eq!((s.m, s.m0, s.d_sub, s.theory_ok), (2001, 667, 3, true));

        assert!(SvrgSchedule::theory(10, 0.0, None).is_err());
        assert!(SvrgSchedule::theory(10, f64::INFINITY, None).is_err());
    }

    #[test]
    fn explicit_schedule_needs_divisibility() {
        assert!(SvrgSchedule::new(10, 3, 0.1).is_err());
        let s = SvrgSchedule::new(12, 3, 0.1).unwrap();
        assert_eq!(s.d_sub, 4);
    }

    proptest! {
        #[test]
        fn theory_schedule_invariants(n in 1usize..200_000, l in 0.01f64..100.0) {
            let s = SvrgSchedule::theory(n, l, None).unwrap();
            prop_assert_eq!(s.d_sub * s.m0, s.m);
            prop_assert!(s.m >= n);
            prop_assert_eq!(s.end.weights.len(), s.m0);
            prop_assert!(s.end.weights.iter().all(|w| *w > 0.0));
            let total: f64 = s.end.probabilities.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            if s.d_sub > 1 {
                prop_assert!(s.theory_ok);
            }
        }
    }
}
