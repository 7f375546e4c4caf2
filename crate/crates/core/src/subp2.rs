//! Second-order subproblem solver for the unconstrained Euclidean case.
//!
//! The solution of `F + ∇F·Δ + 2L₂‖Δ‖Δ = 0` is `Δ = −s(λ*)` with
//! `s(λ) = (∇F + λI)⁻¹F` and `λ* = 2L₂‖s(λ*)‖`. We bisect on λ, reusing one
//! real Schur factorization of `∇F` for every shifted solve.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smallest_symmetric_eigenvalue, DenseMatrix, RealSchur, Vector};
use crate::operator::Operator;
use crate::oracles::OracleResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subp2Config<T> {
    pub l2: T,
    pub delta: T,
    /// Lower bound on `xᵀ∇F(x̂)x / ‖x‖²`.
    pub mu: T,
    /// Bound on `‖∇U(T(x̂))‖` along the iterate path (reporting only).
    pub gamma: Option<T>,
    /// Bound on `‖x_{i+½} − x_{i+1}‖` along the iterate path (reporting only).
    pub lambda_bound: Option<T>,
    /// Bound on `‖F(x_i)‖` along the iterate path (reporting only).
    pub pi: Option<T>,
}

impl<T: Scalar> Subp2Config<T> {
    pub fn new(l2: T, delta: T, mu: T) -> Result<Self> {
        let cfg = Self { l2, delta, mu, gamma: None, lambda_bound: None, pi: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l2 > T::zero()) || !self.l2.is_finite() {
            return Err(Error::Configuration(format!("L₂ must be positive, got {}", self.l2)));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::Configuration(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(Error::Configuration(format!("μ must be positive, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Cached real Schur factorization `∇F(x̂) = Q U Qᵀ` together with `QᵀF(x̂)`.
#[derive(Debug, Clone)]
pub struct ShiftedSolver<T> {
    schur: RealSchur<T>,
    rhs: Vector<T>,
    rhs_rotated: Vector<T>,
}

impl<T: Scalar> ShiftedSolver<T> {
    pub fn new(jacobian: &DenseMatrix<T>, value: &Vector<T>) -> Result<Self> {
        value.check_dim(jacobian.rows())?;
        let schur = RealSchur::new(jacobian)?;
        let rhs_rotated = schur.q().matvec_transpose(value);
        Ok(Self { schur, rhs: value.clone(), rhs_rotated })
    }

    pub fn schur(&self) -> &RealSchur<T> {
        &self.schur
    }

    pub fn rhs(&self) -> &Vector<T> {
        &self.rhs
    }

    /// `s(λ) = (∇F(x̂) + λI)⁻¹ F(x̂)` in O(n²).
    pub fn shifted_solve(&self, lambda: T) -> Result<Vector<T>> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::Domain(format!("shift must be nonnegative and finite, got {lambda}")));
        }
        let w = self.schur.solve_quasi_triangular(&self.rhs_rotated, lambda)?;
        Ok(self.schur.q().matvec(&w))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subp2Outcome<T> {
    pub oracle: OracleResult<T>,
    /// The returned shift λ.
    pub lambda: T,
    pub shifted_solves: usize,
    /// Width of the final bracket around λ*.
    pub bracket_width: T,
}

/// Bisection solver for the `p = 2` unconstrained Euclidean subproblem at `x̂`.
///
/// `oracle.delta_achieved` is the perturbation bound `width·‖F(x̂)‖/μ²` on
/// `‖T̃(x̂) − T(x̂)‖`.
pub fn solve_so_vi<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    center: &Vector<T>,
    cfg: &Subp2Config<T>,
) -> Result<Subp2Outcome<T>> {
    cfg.validate()?;
    center.check_dim(op.dim())?;
    let value = op.eval(center)?;
    let fnorm = value.norm2();
    if fnorm == T::zero() {
        return Ok(Subp2Outcome {
            oracle: OracleResult { solution: center.clone(), delta_achieved: T::zero(), inner_iterations: 0 },
            lambda: T::zero(),
            shifted_solves: 0,
            bracket_width: T::zero(),
        });
    }
    let jacobian = op.jacobian(center)?;
    if let Ok(lowest) = smallest_symmetric_eigenvalue(&jacobian, 200, T::c(1e-8)) {
        if lowest < cfg.mu * (T::one() - T::c(1e-8)) {
            warn!("supplied μ = {} exceeds the estimated Jacobian modulus {lowest}", cfg.mu);
        }
    }
    let solver = ShiftedSolver::new(&jacobian, &value)?;
    let two_l = T::c(2.0) * cfg.l2;
    let nu = cfg.delta * cfg.mu * cfg.mu / fnorm;

    let mut solves = 0usize;
    let mut psi = |lambda: T| -> Result<(T, Vector<T>)> {
        solves += 1;
        let s = solver.shifted_solve(lambda)?;
        Ok((two_l * s.norm2() - lambda, s))
    };

    let mut lo = T::zero();
    let mut hi = fnorm / cfg.delta;
    let (mut psi_hi, mut s_hi) = psi(hi)?;
    // ψ is strictly decreasing; widen the bracket in the rare case ‖F‖ < 2L₂δ².
    let mut widenings = 0;
    while psi_hi > T::zero() {
        lo = hi;
        hi = hi * T::c(2.0);
        (psi_hi, s_hi) = psi(hi)?;
        widenings += 1;
        if widenings > 200 {
            return Err(Error::Precondition("could not bracket the stationary shift".into()));
        }
    }
    let mut lambda = hi;
    let mut step = s_hi;
    while hi - lo > nu && hi > nu {
        let mid = lo + (hi - lo) / T::c(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let (value_mid, s_mid) = psi(mid)?;
        lambda = mid;
        step = s_mid;
        if value_mid > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let width = hi - lo;
    let solution = center - &step;
    solution.check_finite("second-order subproblem solution")?;
    Ok(Subp2Outcome {
        oracle: OracleResult {
            solution,
            delta_achieved: width * fnorm / (cfg.mu * cfg.mu),
            inner_iterations: solves,
        },
        lambda,
        shifted_solves: solves,
        bracket_width: width,
    })
}

/// `δ·(L₂/2 + Γ)`: the gap coefficient per unit distance of the approximate solution.
pub fn so_error_bound<T: Scalar>(cfg: &Subp2Config<T>) -> Result<T> {
    let gamma = cfg.gamma.ok_or_else(|| Error::Configuration("Γ is required for the error bound".into()))?;
    Ok(cfg.delta * (cfg.l2 / T::c(2.0) + gamma))
}

/// `δ = ε / (2Λ(L₂ + Γ))`, the accuracy making each step's slack at most ε/2.
pub fn delta_for_target<T: Scalar>(cfg: &Subp2Config<T>, epsilon: T) -> Result<T> {
    let gamma = cfg.gamma.ok_or_else(|| Error::Configuration("Γ is required to choose δ".into()))?;
    let lambda = cfg.lambda_bound.ok_or_else(|| Error::Configuration("Λ is required to choose δ".into()))?;
    Ok(epsilon / (T::c(2.0) * lambda * (cfg.l2 + gamma)))
}
