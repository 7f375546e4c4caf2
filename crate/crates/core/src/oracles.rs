//! The regularized Taylor subproblem and its solvers.
//!
//! For a centre `x̂` the subproblem operator is
//! `U(y) = T_{p−1}(y; x̂) + (2L_p/p!)·ω(y, x̂)^{(p−1)/2}·(∇d(y) − ∇d(x̂))`
//! and an oracle returns a point `T(x̂)` with `⟨U(T), T − x⟩ ≤ δ` over the set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gap_certificate, mirror_step, FeasibleSet, ProxSetup};
use crate::linalg::{DenseMatrix, Vector};
use crate::operator::Operator;
use crate::scalar::{factorial, Scalar};

pub const DEFAULT_MAX_INNER: usize = 10_000;

/// Iterations without a new best certificate before the inner step is halved.
const STAGNATION_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult<T> {
    pub solution: Vector<T>,
    pub delta_achieved: T,
    pub inner_iterations: usize,
}

pub struct SubproblemSpec<'a, T: Scalar, O: Operator<T> + ?Sized> {
    op: &'a O,
    center: Vector<T>,
    order: usize,
    lp: T,
    setup: ProxSetup,
    set: FeasibleSet<T>,
    certification_ball: Option<FeasibleSet<T>>,
    value_at_center: Vector<T>,
    jacobian_at_center: Option<DenseMatrix<T>>,
    grad_d_center: Vector<T>,
}

impl<'a, T: Scalar, O: Operator<T> + ?Sized> SubproblemSpec<'a, T, O> {
    pub fn new(op: &'a O, center: Vector<T>, order: usize, lp: T, setup: ProxSetup, set: FeasibleSet<T>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Configuration("subproblem order must be at least 1".into()));
        }
        if order - 1 > op.max_derivative_order() {
            return Err(Error::UnsupportedOrder { requested: order - 1, available: op.max_derivative_order() });
        }
        if !(lp > T::zero()) || !lp.is_finite() {
            return Err(Error::Configuration(format!("L_p must be positive, got {lp}")));
        }
        if set.dim() != op.dim() {
            return Err(Error::DimensionMismatch { expected: op.dim(), got: set.dim() });
        }
        set.check_contains(&center, "subproblem centre")?;
        let value_at_center = op.eval(&center)?;
        let jacobian_at_center = if order >= 2 { Some(op.jacobian(&center)?) } else { None };
        let grad_d_center = setup.grad_d(&center);
        Ok(Self {
            op,
            center,
            order,
            lp,
            setup,
            set,
            certification_ball: None,
            value_at_center,
            jacobian_at_center,
            grad_d_center,
        })
    }

    /// Compact region used to certify solutions when the feasible set is unbounded.
    pub fn with_certification_ball(mut self, ball: FeasibleSet<T>) -> Result<Self> {
        if !matches!(ball, FeasibleSet::Ball { .. }) {
            return Err(Error::Configuration("certification region must be a ball".into()));
        }
        ball.check_contains(&self.center, "subproblem centre")?;
        self.certification_ball = Some(ball);
        Ok(self)
    }

    /// Radius `4‖x̂‖ + 4(p!‖g(x̂)‖/(2L_p))^{1/p}` (at least 1) of the default
    /// origin-centred certification ball.
    pub fn default_certification_radius(&self) -> T {
        let p = self.order;
        let reach = (factorial::<T>(p) * self.value_at_center.norm2() / (T::c(2.0) * self.lp))
            .powf(T::one() / T::from_usize_lossy(p));
        (T::c(4.0) * self.center.norm2() + T::c(4.0) * reach).max(T::one())
    }

    pub fn center(&self) -> &Vector<T> {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lp(&self) -> T {
        self.lp
    }

    pub fn setup(&self) -> ProxSetup {
        self.setup
    }

    pub fn set(&self) -> &FeasibleSet<T> {
        &self.set
    }

    pub fn operator(&self) -> &O {
        self.op
    }

    pub fn value_at_center(&self) -> &Vector<T> {
        &self.value_at_center
    }

    pub fn jacobian_at_center(&self) -> Option<&DenseMatrix<T>> {
        self.jacobian_at_center.as_ref()
    }

    /// The compact region certificates are taken over: the set itself, or the
    /// certification ball for unbounded sets.
    pub fn certification_region(&self) -> Result<&FeasibleSet<T>> {
        if self.set.is_compact() {
            Ok(&self.set)
        } else {
            self.certification_ball.as_ref().ok_or(Error::UnboundedCertificate)
        }
    }

    /// `T_{p−1}(y; x̂)`
    pub fn taylor_part(&self, y: &Vector<T>) -> Result<Vector<T>> {
        y.check_dim(self.op.dim())?;
        let h = y - &self.center;
        let mut out = self.value_at_center.clone();
        if let Some(j) = &self.jacobian_at_center {
            out.axpy(T::one(), &j.matvec(&h));
        }
        for i in 2..self.order {
            let term = self.op.contraction(i, &self.center, &h)?;
            out.axpy(T::one() / factorial::<T>(i), &term);
        }
        Ok(out)
    }

    /// `U_{p,x̂}(y)`
    pub fn evaluate_u(&self, y: &Vector<T>) -> Result<Vector<T>> {
        let mut out = self.taylor_part(y)?;
        let p = self.order;
        let weight = if p == 1 {
            T::one()
        } else {
            self.setup.omega(y, &self.center).powf(T::from_usize_lossy(p - 1) / T::c(2.0))
        };
        let coeff = T::c(2.0) * self.lp / factorial::<T>(p) * weight;
        if coeff != T::zero() {
            let dgrad = &self.setup.grad_d(y) - &self.grad_d_center;
            out.axpy(coeff, &dgrad);
        }
        out.check_finite("subproblem operator")?;
        Ok(out)
    }

    /// `sup_{x ∈ region} ⟨U(y), y − x⟩`
    pub fn certificate(&self, y: &Vector<T>) -> Result<T> {
        let region = self.certification_region()?;
        gap_certificate(region, y, &self.evaluate_u(y)?)
    }
}

/// Closed-form oracle for `p = 1`: a single mirror step from `x̂` with weight `2L₁`.
pub fn solve_p1<T: Scalar, O: Operator<T> + ?Sized>(spec: &SubproblemSpec<'_, T, O>) -> Result<OracleResult<T>> {
    if spec.order != 1 {
        return Err(Error::Configuration(format!("closed-form oracle needs p = 1, got p = {}", spec.order)));
    }
    let solution = mirror_step(
        spec.setup,
        &spec.set,
        &spec.center,
        &spec.value_at_center,
        T::c(2.0) * spec.lp,
    )?;
    Ok(OracleResult { solution, delta_achieved: T::zero(), inner_iterations: 0 })
}

/// Largest sampled ratio `‖U(x̂ + h) − U(x̂)‖ / ‖h‖` over a few short probes.
fn local_lipschitz<T: Scalar, O: Operator<T> + ?Sized>(
    spec: &SubproblemSpec<'_, T, O>,
    region: &FeasibleSet<T>,
    u0: &Vector<T>,
) -> Result<T> {
    let n = spec.center.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e_ed0f_1acb);
    let scale = T::c(1e-3) * (T::one() + spec.center.norm_inf());
    let norm = spec.setup.norm();
    let mut best = T::zero();
    for _ in 0..8 {
        let dir = Vector::from_raw((0..n).map(|_| T::c(rng.random_range(-1.0..1.0))).collect());
        let probe = region.project(&spec.center.add_scaled(scale, &dir));
        let step = norm.norm(&(&probe - &spec.center));
        if step == T::zero() {
            continue;
        }
        let u = spec.evaluate_u(&probe)?;
        best = best.max(norm.dual().norm(&(&u - u0)) / step);
    }
    Ok(best.max(T::c(1e-12)))
}

/// Generic δ-approximate oracle: extragradient on the monotone field `U`
/// over the certification region, with step halving when a local Lipschitz
/// test fails or the best certificate stops improving.
pub fn solve_inner<T: Scalar, O: Operator<T> + ?Sized>(
    spec: &SubproblemSpec<'_, T, O>,
    delta: T,
    max_inner: usize,
) -> Result<OracleResult<T>> {
    if !(delta > T::zero()) {
        return Err(Error::Configuration(format!("oracle accuracy must be positive, got {delta}")));
    }
    if spec.order == 1 {
        let mut out = solve_p1(spec)?;
        out.inner_iterations = 1;
        return Ok(out);
    }
    let default_ball;
    let region = match spec.certification_region() {
        Ok(r) => r,
        Err(Error::UnboundedCertificate) => {
            default_ball = FeasibleSet::centered_ball(spec.center.dim(), spec.default_certification_radius())?;
            &default_ball
        }
        Err(e) => return Err(e),
    };
    let norm = spec.setup.norm();

    let mut y = spec.center.clone();
    let mut u = spec.evaluate_u(&y)?;
    let mut best_cert = gap_certificate(region, &y, &u)?;
    let mut best = y.clone();
    if best_cert <= delta {
        return Ok(OracleResult { solution: best, delta_achieved: best_cert, inner_iterations: 0 });
    }
    let mut gamma = T::one() / (T::c(2.0) * local_lipschitz(spec, region, &u)?);
    let mut since_improvement = 0usize;
    let mut iterations = 0usize;
    while iterations < max_inner {
        iterations += 1;
        let alpha = T::one() / (T::c(2.0) * gamma);
        let half = mirror_step(spec.setup, region, &y, &u, alpha)?;
        let u_half = spec.evaluate_u(&half)?;
        let moved = norm.norm(&(&half - &y));
        if gamma * norm.dual().norm(&(&u_half - &u)) > T::c(0.9) * moved {
            gamma = gamma / T::c(2.0);
            continue;
        }
        y = mirror_step(spec.setup, region, &y, &u_half, alpha)?;
        u = spec.evaluate_u(&y)?;
        let cert = gap_certificate(region, &y, &u)?;
        if cert < best_cert {
            best_cert = cert;
            best = y.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= STAGNATION_WINDOW {
                gamma = gamma / T::c(2.0);
                since_improvement = 0;
            }
        }
        if best_cert <= delta {
            return Ok(OracleResult { solution: best, delta_achieved: best_cert, inner_iterations: iterations });
        }
    }
    Err(Error::NonConvergence {
        iterations,
        certificate: best_cert.to_f64_lossy(),
        best: best.to_f64_vec(),
    })
}
