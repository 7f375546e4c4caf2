//! Empirical estimators: smoothness constants, monotonicity, rate fitting.

mod suites;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::instances::HardInstance;
use crate::linalg::{smallest_symmetric_eigenvalue, DenseMatrix, Vector};
use crate::operator::{taylor_expand, Operator};
use crate::scalar::{factorial, Scalar};

pub use suites::{run_suite, subproblem_case, CheckResult, SuiteReport, SUITES};

/// Transient points dropped by [`fit_rate_exponent`] when no count is given.
pub const DEFAULT_TRANSIENT: usize = 4;

/// `p!·max ‖g(y) − T_{p−1}(y;x)‖_*/‖y − x‖^p` over sampled pairs in `region`.
/// A lower bound on the true order-`p` constant.
///
/// Half the pairs are independent samples; the rest move from a sample along a
/// random coordinate axis, where separable nonlinearities peak.
pub fn estimate_lp<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    p: usize,
    region: &FeasibleSet<T>,
    samples: usize,
    seed: u64,
) -> Result<T> {
    if p == 0 || p > op.max_derivative_order() + 1 {
        return Err(Error::UnsupportedOrder { requested: p.saturating_sub(1), available: op.max_derivative_order() });
    }
    let norm = op.norm();
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::zero();
    for s in 0..samples {
        let x = region.sample(&mut rng)?;
        let y = if s % 2 == 0 {
            region.sample(&mut rng)?
        } else {
            let axis = rng.random_range(0..n);
            let step = T::c(rng.random_range(-4.0..4.0));
            let mut y = x.clone();
            y[axis] = y[axis] + step;
            region.project(&y)
        };
        let dist = norm.norm(&(&y - &x));
        if dist == T::zero() {
            continue;
        }
        let rem = norm.dual().norm(&(&op.eval(&y)? - &taylor_expand(op, p - 1, &x, &y)?));
        best = best.max(rem / dist.powi(p as i32));
    }
    Ok(best * factorial::<T>(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
}

/// Least-squares slope of `ln gap` against `ln count`.
///
/// Nonpositive or non-finite gaps are skipped. `transient` points are dropped
/// from the front; `None` drops `min(4, usable − 4)`.
pub fn fit_rate_exponent(points: &[(f64, f64)], transient: Option<usize>) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(c, g)| *g > 0.0 && g.is_finite() && *c > 0.0 && c.is_finite())
        .map(|&(c, g)| (c.ln(), g.ln()))
        .collect();
    let drop = transient.unwrap_or_else(|| DEFAULT_TRANSIENT.min(usable.len().saturating_sub(4)));
    let kept = &usable[drop.min(usable.len())..];
    if kept.len() < 4 {
        return Err(Error::InsufficientData { usable: kept.len(), needed: 4 });
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / m;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { usable: 1, needed: 4 });
    }
    let slope = sxy / sxx;
    Ok(RateFit { slope, intercept: my - slope * mx, points_used: kept.len() })
}

/// Whether `Σξ² ≤ R` yields `Σξ^{−q} ≥ T^{q/2+1}/R^{q/2}` (with slack `1 − 1e-12`).
pub fn power_mean_check(xi: &[f64], q: f64, r: f64) -> Result<bool> {
    if xi.is_empty() {
        return Err(Error::InsufficientData { usable: 0, needed: 1 });
    }
    if q > 0.0 && xi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Precondition("entries must be positive when q > 0".into()));
    }
    let squares: f64 = xi.iter().map(|v| v * v).sum();
    if squares > r {
        return Err(Error::Precondition(format!("Σξ² = {squares} exceeds R = {r}")));
    }
    let t = xi.len() as f64;
    let lhs: f64 = xi.iter().map(|v| v.powf(-q)).sum();
    let rhs = t.powf(q / 2.0 + 1.0) / r.powf(q / 2.0);
    Ok(lhs >= rhs * (1.0 - 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// `min ⟨g(x) − g(y), x − y⟩/‖x − y‖²` over sampled pairs.
    pub min_pairing: f64,
    /// Smallest eigenvalue of the symmetrized Jacobian over sampled points.
    pub min_eigenvalue: f64,
}

pub fn monotonicity_audit<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    region: &FeasibleSet<T>,
    pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_pairing = f64::INFINITY;
    let mut min_eigenvalue = f64::INFINITY;
    for _ in 0..pairs {
        let x = region.sample(&mut rng)?;
        let y = region.sample(&mut rng)?;
        let d = &x - &y;
        let dd = d.norm2_squared();
        if dd > T::zero() {
            let pairing = (&op.eval(&x)? - &op.eval(&y)?).dot(&d) / dd;
            min_pairing = min_pairing.min(pairing.to_f64_lossy());
        }
        let sym = op.jacobian(&x)?.symmetric_part();
        let lowest = smallest_symmetric_eigenvalue(&sym, 200, T::c(1e-8))?;
        min_eigenvalue = min_eigenvalue.min(lowest.to_f64_lossy());
    }
    Ok(MonotonicityReport { min_pairing, min_eigenvalue })
}

/// Numerical `min f` over the subspace where only the first `t` coordinates
/// are free: gradient descent with step `1/(10·local L)` (local L from the
/// restricted Hessian, capped step 1), halved until the objective decreases.
pub fn restricted_f_descent<T: Scalar>(inst: &HardInstance<T>, max_iter: usize) -> Result<T> {
    let t = inst.params().t;
    let n = inst.params().n;
    let mut x = Vector::zeros(n);
    let mut fx = inst.f(&x)?;
    for _ in 0..max_iter {
        let mut g = inst.grad_f(&x)?;
        for i in t..n {
            g[i] = T::zero();
        }
        let gnorm = g.norm2();
        if gnorm <= T::c(1e-13) * (T::one() + fx.abs()) {
            break;
        }
        let h = inst.hessian_f(&x)?;
        let mut local = DenseMatrix::zeros(t, t);
        for i in 0..t {
            for j in 0..t {
                local[(i, j)] = h[(i, j)];
            }
        }
        let l_loc = local.norm2();
        let mut step = if l_loc > T::zero() { (T::one() / (T::c(10.0) * l_loc)).min(T::one()) } else { T::one() };
        let mut moved = false;
        for _ in 0..60 {
            let trial = x.add_scaled(-step, &g);
            let ft = inst.f(&trial)?;
            if ft < fx {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
            step = step / T::c(2.0);
        }
        if !moved {
            break;
        }
    }
    Ok(fx)
}

/// `min ‖Ax − b‖₂` over the first-`t`-coordinates subspace by normal equations.
pub fn restricted_residual_least_squares<T: Scalar>(inst: &HardInstance<T>) -> Result<T> {
    let t = inst.params().t;
    let a = inst.a();
    let m = a.rows();
    let mut cols = DenseMatrix::zeros(m, t);
    for i in 0..m {
        for j in 0..t {
            cols[(i, j)] = a[(i, j)];
        }
    }
    if cols.max_abs() == T::zero() {
        return Ok(inst.b().norm2());
    }
    let normal = cols.transpose().matmul(&cols);
    let coeffs = normal.solve(&cols.matvec_transpose(inst.b()))?;
    let fitted = cols.matvec(&coeffs);
    Ok(fitted.add_scaled(-T::one(), inst.b()).norm2())
}
