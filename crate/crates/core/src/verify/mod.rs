//! Numerical oracles: finite-difference gradients, exact estimator variance,
//! smoothness probes and log-log rate fits.

use crate::error::{invalid, Error, Result};
use crate::linalg::{sq_dist, ParamVec};
use crate::objectives::FiniteSum;
use crate::rng::RandomSource;

/// Central differences with per-coordinate step `h_j = h0 * (1 + |x_j|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub h0: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { h0: 1e-6 }
    }
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &ParamVec, cfg: FdConfig) -> Result<ParamVec> {
    if !(cfg.h0 > 0.0) {
        return invalid("finite-difference step must be positive");
    }
    let mut probe = x.as_slice().to_vec();
    let mut out = Vec::with_capacity(probe.len());
    for j in 0..probe.len() {
        let xj = probe[j];
        let h = cfg.h0 * (1.0 + xj.abs());
        probe[j] = xj + h;
        let up = f(&probe);
        probe[j] = xj - h;
        let down = f(&probe);
        probe[j] = xj;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("objective near coordinate {j}")));
        }
        out.push((up - down) / (2.0 * h));
    }
    ParamVec::new(out)
}

/// `||a - b|| / ||b||`, or `0` when the vectors coincide.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = sq_dist(a, b).sqrt();
    if diff == 0.0 {
        return 0.0;
    }
    diff / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest `n` accepted by the enumerating oracles.
pub const MAX_ENUMERATION: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport {
    /// `(1/n) Σ_i ||(g_i(x) - g_i(snap)) - (g(x) - g(snap))||^2`.
    pub variance: f64,
    /// `L^2 ||x - snap||^2`.
    pub bound: f64,
}

fn check_enumerable<F: FiniteSum + ?Sized>(obj: &F) -> Result<()> {
    if obj.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if obj.len() > MAX_ENUMERATION {
        return invalid(format!("{} components exceed the enumeration limit {MAX_ENUMERATION}", obj.len()));
    }
    Ok(())
}

fn variance_at<F: FiniteSum + ?Sized>(obj: &F, x: &[f64], snap: &[f64]) -> f64 {
    let n = obj.len();
    let (_, gx) = obj.value_and_gradient(x);
    let (_, gs) = obj.value_and_gradient(snap);
    let mean: Vec<f64> = gx.iter().zip(&gs).map(|(a, b)| a - b).collect();
    let mut diff = vec![0.0; obj.dim()];
    let mut total = 0.0;
    for i in 0..n {
        diff.iter_mut().zip(&mean).for_each(|(d, m)| *d = -m);
        obj.add_component_gradient(i, x, 1.0, &mut diff);
        obj.add_component_gradient(i, snap, -1.0, &mut diff);
        total += diff.iter().map(|v| v * v).sum::<f64>();
    }
    total / n as f64
}

/// Exact variance of the single-sample estimator at `x` with snapshot `snap`.
pub fn exact_variance<F: FiniteSum + ?Sized>(obj: &F, x: &ParamVec, snap: &ParamVec) -> Result<VarianceReport> {
    check_enumerable(obj)?;
    for v in [x, snap] {
        if v.len() != obj.dim() {
            return Err(Error::DimensionMismatch { expected: obj.dim(), found: v.len() });
        }
    }
    let l = obj.smoothness();
    Ok(VarianceReport {
        variance: variance_at(obj, x.as_slice(), snap.as_slice()),
        bound: l * l * sq_dist(x.as_slice(), snap.as_slice()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateReport {
    /// `Σ_{t<m} sigma_t^2`, each term enumerated exactly.
    pub variance_sum: f64,
    /// `L^2 d^2 Σ_{t<m} ||x_{t+1} - x_{t+1-m0}||^2`, with `x_j = x_0` for `j < 0`.
    pub bound: f64,
}

/// Sub-epoch variance aggregate over one recorded epoch `x_0, ..., x_m`,
/// where `x_0` is the snapshot.
pub fn epoch_variance_aggregate<F: FiniteSum + ?Sized>(
    obj: &F,
    iterates: &[ParamVec],
    m0: usize,
    d_sub: usize,
) -> Result<AggregateReport> {
    check_enumerable(obj)?;
    if iterates.len() < 2 || m0 == 0 || d_sub == 0 {
        return invalid("need at least one step and positive m0, d");
    }
    let m = iterates.len() - 1;
    let snap = iterates[0].as_slice();
    let at = |j: isize| if j < 0 { snap } else { iterates[j as usize].as_slice() };
    let mut variance_sum = 0.0;
    let mut dist_sum = 0.0;
    for t in 0..m {
        variance_sum += variance_at(obj, iterates[t].as_slice(), snap);
        dist_sum += sq_dist(at(t as isize + 1), at(t as isize + 1 - m0 as isize));
    }
    let l = obj.smoothness();
    let d = d_sub as f64;
    Ok(AggregateReport { variance_sum, bound: l * l * d * d * dist_sum })
}

/// Largest `||g_i(x) - g_i(y)|| / ||x - y||` over random draws.
///
/// `x` is Gaussian with standard deviation `scale`; `y` is `x` plus a
/// Gaussian offset whose size is uniform in `(0, scale]`.
pub fn smoothness_probe<F: FiniteSum + ?Sized>(obj: &F, trials: usize, scale: f64, rng: &mut RandomSource) -> Result<f64> {
    if trials == 0 {
        return invalid("smoothness probe needs at least one trial");
    }
    if obj.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = obj.dim();
    let mut best = 0.0f64;
    let mut diff = vec![0.0; d];
    for _ in 0..trials {
        let i = rng.draw_index(obj.len())?;
        let x: Vec<f64> = (0..d).map(|_| scale * rng.standard_normal()).collect();
        let r = scale * (1.0 - rng.uniform());
        let y: Vec<f64> = x.iter().map(|v| v + r * rng.standard_normal()).collect();
        let gap = sq_dist(&x, &y).sqrt();
        if gap == 0.0 {
            continue;
        }
        diff.iter_mut().for_each(|v| *v = 0.0);
        obj.add_component_gradient(i, &x, 1.0, &mut diff);
        obj.add_component_gradient(i, &y, -1.0, &mut diff);
        best = best.max(diff.iter().map(|v| v * v).sum::<f64>().sqrt() / gap);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln S, ln value)`.
pub fn fit_rate_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return invalid("a rate fit needs at least three points");
    }
    if points.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0) || !s.is_finite() || !v.is_finite()) {
        return invalid("rate fit points must be positive and finite");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return invalid("rate fit needs at least two distinct epoch counts");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticSum;

    #[test]
    fn fd_known_derivatives() {
        let g = fd_gradient(|x| x[0].sin(), &ParamVec::new(vec![0.0]).unwrap(), FdConfig::default()).unwrap();
        assert!((g.as_slice()[0] - 1.0).abs() < 1e-9);
        let x = ParamVec::new(vec![1.0, 2.0]).unwrap();
        let g = fd_gradient(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &x, FdConfig::default()).unwrap();
        assert!((g.as_slice()[0] - 1.0).abs() < 1e-8 && (g.as_slice()[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fd_reports_coordinate() {
        let x = ParamVec::new(vec![0.0, 0.0]).unwrap();
        let err = fd_gradient(|x| if x[1] != 0.0 { f64::NAN } else { 0.0 }, &x, FdConfig::default()).unwrap_err();
        assert!(err.to_string().contains("coordinate 1"));
    }

    #[test]
    fn scalar_quadratic_variance() {
        let q = QuadraticSum::new(vec![1.0, 3.0], vec![vec![0.0], vec![0.0]]).unwrap();
        let r = exact_variance(&q, &ParamVec::new(vec![1.0]).unwrap(), &ParamVec::zeros(1)).unwrap();
        assert!((r.variance - 1.0).abs() < 1e-15);
        assert_eq!(r.bound, 9.0);
        let same = ParamVec::new(vec![0.4]).unwrap();
        let r = exact_variance(&q, &same, &same).unwrap();
        assert_eq!((r.variance, r.bound), (0.0, 0.0));
    }

    #[test]
    fn probe_on_simple_functions() {
        let q = QuadraticSum::new(vec![1.0], vec![vec![0.0, 0.0]]).unwrap();
        let r = smoothness_probe(&q, 50, 1.0, &mut RandomSource::new(1)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let zero = QuadraticSum::new(vec![0.0], vec![vec![0.0]]).unwrap();
        assert_eq!(smoothness_probe(&zero, 10, 1.0, &mut RandomSource::new(1)).unwrap(), 0.0);
        assert!(smoothness_probe(&q, 0, 1.0, &mut RandomSource::new(1)).is_err());
    }

    #[test]
    fn slope_fits() {
        let exact: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&s| (s, 3.0 / s)).collect();
        let fit = fit_rate_slope(&exact).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
        let flat = fit_rate_slope(&[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(fit_rate_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn planted_power_law(expo in -3.0f64..3.0, c in 0.01f64..100.0) {
            let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|&s: &f64| (s, c * s.powf(expo))).collect();
            let fit = fit_rate_slope(&pts).unwrap();
            proptest::prop_assert!((fit.slope - expo).abs() <= 1e-9);
        }
    }
}
