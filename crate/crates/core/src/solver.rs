//! Outer loop of the line-search-free higher-order Mirror Prox method, with
//! exact or δ-approximate subproblem oracles.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mirror_step, FeasibleSet, ProxSetup};
use crate::linalg::{CompensatedScalar, CompensatedSum, Vector};
use crate::operator::Operator;
use crate::oracles::{solve_inner, solve_p1, OracleResult, SubproblemSpec, DEFAULT_MAX_INNER};
use crate::scalar::{factorial, Scalar};
use crate::subp2::{solve_so_vi, Subp2Config};

/// Steps with `ω(x_{i+½}, x_i)` at or below this are treated as exact fixed points.
pub const DEGENERATE_OMEGA: f64 = 1e-28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleChoice<T> {
    P1ClosedForm,
    /// Bisection solver; `delta` defaults to ε/2.
    P2Bisection { delta: Option<T>, mu: T },
    /// Extragradient inner solver; `delta` defaults to ε/2.
    GenericInner { delta: Option<T>, max_inner: Option<usize>, certification_radius: Option<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub p: usize,
    pub lp: T,
    /// Iterations run are `0..=k`.
    pub k: usize,
    pub oracle: OracleChoice<T>,
    pub setup: ProxSetup,
    pub set: FeasibleSet<T>,
    pub epsilon: Option<T>,
    pub start: Vector<T>,
    #[serde(default)]
    pub record_timing: bool,
}

impl<T: Scalar> SolverConfig<T> {
    fn oracle_delta(&self, delta: Option<T>) -> Result<T> {
        match (delta, self.epsilon) {
            (Some(d), _) => Ok(d),
            (None, Some(eps)) => Ok(eps / T::c(2.0)),
            (None, None) => Err(Error::Configuration("approximate oracle needs δ or a target ε".into())),
        }
    }

    pub fn validate<O: Operator<T> + ?Sized>(&self, op: &O) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Configuration("p must be at least 1".into()));
        }
        if !(self.lp > T::zero()) || !self.lp.is_finite() {
            return Err(Error::Configuration(format!("L_p must be positive, got {}", self.lp)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > T::zero()) {
                return Err(Error::Configuration(format!("ε must be positive, got {eps}")));
            }
        }
        if self.set.dim() != op.dim() {
            return Err(Error::DimensionMismatch { expected: op.dim(), got: self.set.dim() });
        }
        self.set.check_contains(&self.start, "start point")?;
        if self.setup == ProxSetup::Entropy && !self.set.is_simplicial() {
            return Err(Error::Configuration("entropy prox requires simplex blocks".into()));
        }
        match &self.oracle {
            OracleChoice::P1ClosedForm if self.p != 1 => {
                Err(Error::Configuration("the closed-form oracle requires p = 1".into()))
            }
            OracleChoice::P2Bisection { delta, mu } => {
                if self.p != 2 {
                    return Err(Error::Configuration("the bisection oracle requires p = 2".into()));
                }
                if self.setup != ProxSetup::Euclidean || !matches!(self.set, FeasibleSet::WholeSpace { .. }) {
                    return Err(Error::Configuration(
                        "the bisection oracle requires the unconstrained Euclidean setup".into(),
                    ));
                }
                Subp2Config::new(self.lp, self.oracle_delta(*delta)?, *mu).map(|_| ())
            }
            OracleChoice::GenericInner { delta, .. } => {
                if self.p - 1 > op.max_derivative_order() {
                    return Err(Error::UnsupportedOrder { requested: self.p - 1, available: op.max_derivative_order() });
                }
                let d = self.oracle_delta(*delta)?;
                if !(d > T::zero()) {
                    return Err(Error::Configuration(format!("δ must be positive, got {d}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_approximate(&self) -> bool {
        !matches!(self.oracle, OracleChoice::P1ClosedForm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub x: Vector<T>,
    pub x_half: Vector<T>,
    pub x_next: Vector<T>,
    pub lambda: T,
    pub omega_step: T,
    pub oracle_delta: T,
    pub inner_iters: usize,
    pub wall_time_ms: f64,
    pub gap_estimate: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub average: Vector<T>,
    pub lambda_sum: T,
    /// Set when a vanishing step ended the run at an exact solution.
    pub degenerate_exit: bool,
}

impl<T: Scalar> SolverTrace<T> {
    pub fn oracle_calls(&self) -> usize {
        self.records.len() + usize::from(self.degenerate_exit)
    }
}

/// Failed run: the error and everything recorded before it.
#[derive(Debug, Clone)]
pub struct RunFailure<T> {
    pub error: Error,
    pub partial: SolverTrace<T>,
}

impl<T> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.partial.records.len())
    }
}

impl<T: std::fmt::Debug> std::error::Error for RunFailure<T> {}

/// `λ = ½·ω^{−(p−1)/2}`; ½ for `p = 1` regardless of ω.
pub fn lambda_schedule<T: Scalar>(omega_step: T, p: usize) -> Result<T> {
    let half = T::c(0.5);
    if p <= 1 {
        return Ok(half);
    }
    if !(omega_step > T::zero()) {
        return Err(Error::Domain(format!("degenerate step: ω = {omega_step} with p = {p}")));
    }
    Ok(half * omega_step.powf(-T::from_usize_lossy(p - 1) / T::c(2.0)))
}

/// `(16/15)(cL_p/p!)^{2/(p+1)} ω / ε^{2/(p+1)}` with `c = 2` (exact) or `c = 4` (approximate).
pub fn theoretical_iteration_bound<T: Scalar>(p: usize, lp: T, eps: T, omega: T, approximate: bool) -> T {
    let c = if approximate { T::c(4.0) } else { T::c(2.0) };
    let e = T::c(2.0) / T::from_usize_lossy(p + 1);
    T::c(16.0 / 15.0) * (c * lp / factorial::<T>(p)).powf(e) * omega / eps.powf(e)
}

/// `(2L_p/p!)(16/15)^{(p−1)/2} ω^{(p+1)/2} / (K+1)^{(p+1)/2}`
pub fn theoretical_gap_bound<T: Scalar>(p: usize, lp: T, omega: T, k: usize) -> T {
    let pf = T::from_usize_lossy(p);
    T::c(2.0) * lp / factorial::<T>(p)
        * T::c(16.0 / 15.0).powf((pf - T::one()) / T::c(2.0))
        * (omega / T::from_usize_lossy(k + 1)).powf((pf + T::one()) / T::c(2.0))
}

fn call_oracle<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    cfg: &SolverConfig<T>,
    x: &Vector<T>,
) -> Result<OracleResult<T>> {
    match &cfg.oracle {
        OracleChoice::P1ClosedForm => {
            let spec = SubproblemSpec::new(op, x.clone(), 1, cfg.lp, cfg.setup, cfg.set.clone())?;
            solve_p1(&spec)
        }
        OracleChoice::P2Bisection { delta, mu } => {
            let sub = Subp2Config::new(cfg.lp, cfg.oracle_delta(*delta)?, *mu)?;
            Ok(solve_so_vi(op, x, &sub)?.oracle)
        }
        OracleChoice::GenericInner { delta, max_inner, certification_radius } => {
            let mut spec = SubproblemSpec::new(op, x.clone(), cfg.p, cfg.lp, cfg.setup, cfg.set.clone())?;
            if let (Some(r), false) = (certification_radius, cfg.set.is_compact()) {
                spec = spec.with_certification_ball(FeasibleSet::centered_ball(x.dim(), *r)?)?;
            }
            solve_inner(&spec, cfg.oracle_delta(*delta)?, max_inner.unwrap_or(DEFAULT_MAX_INNER))
        }
    }
}

/// Runs `K + 1` iterations and returns the λ-weighted average of the half-iterates.
pub fn run<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    cfg: &SolverConfig<T>,
) -> std::result::Result<(Vector<T>, SolverTrace<T>), RunFailure<T>> {
    run_monitored(op, cfg, |_, _| Ok(None))
}

/// As [`run`], calling `monitor(i, x̂_i)` on the running average after every
/// iteration; its value is stored as the record's `gap_estimate`.
pub fn run_monitored<T, O, M>(
    op: &O,
    cfg: &SolverConfig<T>,
    mut monitor: M,
) -> std::result::Result<(Vector<T>, SolverTrace<T>), RunFailure<T>>
where
    T: Scalar,
    O: Operator<T> + ?Sized,
    M: FnMut(usize, &Vector<T>) -> Result<Option<T>>,
{
    let mut trace = SolverTrace {
        records: Vec::with_capacity(cfg.k + 1),
        average: cfg.start.clone(),
        lambda_sum: T::zero(),
        degenerate_exit: false,
    };
    if let Err(error) = cfg.validate(op) {
        return Err(RunFailure { error, partial: trace });
    }
    let fail = |error: Error, trace: SolverTrace<T>| Err(RunFailure { error, partial: trace });
    let p_fact = factorial::<T>(cfg.p);
    let mut weighted = CompensatedSum::new(op.dim());
    let mut lambda_sum = CompensatedScalar::default();
    let mut x = cfg.start.clone();

    for i in 0..=cfg.k {
        let started = cfg.record_timing.then(Instant::now);
        let oracle = match call_oracle(op, cfg, &x) {
            Ok(o) => o,
            Err(e) => return fail(e, trace),
        };
        let x_half = oracle.solution;
        let omega_step = cfg.setup.omega(&x_half, &x);
        if cfg.p >= 2 && omega_step <= T::c(DEGENERATE_OMEGA) {
            trace.degenerate_exit = true;
            trace.average = x.clone();
            return Ok((x, trace));
        }
        let lambda = match lambda_schedule(omega_step, cfg.p) {
            Ok(l) => l,
            Err(e) => return fail(e, trace),
        };
        let field = match op.eval(&x_half) {
            Ok(f) => f,
            Err(e) => return fail(e, trace),
        };
        let alpha = cfg.lp / (p_fact * lambda);
        let x_next = match mirror_step(cfg.setup, &cfg.set, &x, &field, alpha) {
            Ok(v) => v,
            Err(e) => return fail(e, trace),
        };
        weighted.add_scaled(lambda, &x_half);
        lambda_sum.add(lambda);
        trace.lambda_sum = lambda_sum.value();
        trace.average = weighted.value().scale(T::one() / trace.lambda_sum);
        let gap_estimate = match monitor(i, &trace.average) {
            Ok(g) => g,
            Err(e) => return fail(e, trace),
        };
        let wall_time_ms = started.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        trace.records.push(IterationRecord {
            iter: i,
            x: x.clone(),
            x_half,
            x_next: x_next.clone(),
            lambda,
            omega_step,
            oracle_delta: oracle.delta_achieved,
            inner_iters: oracle.inner_iterations,
            wall_time_ms,
            gap_estimate,
        });
        x = x_next;
    }
    let average = trace.average.clone();
    Ok((average, trace))
}

/// Per-iteration telescoping inequality evaluated on a finished trace:
/// `Σ λᵢ(p!/L)⟨F(x_{i+½}), x_{i+½} − ref⟩ + (15/16)Σ ω(x_{i+½}, xᵢ) − ω(ref, x₀)
///  − (p!/L)Σ λᵢ sᵢ`, where `sᵢ = max(0, ⟨U_{xᵢ}(x_{i+½}), x_{i+½} − x_{i+1}⟩)` is
/// the realized oracle slack (zero for exact oracles up to rounding).
/// The inequality guarantees a nonpositive value.
pub fn telescoping_check<T: Scalar, O: Operator<T> + ?Sized>(
    trace: &SolverTrace<T>,
    reference: &Vector<T>,
    op: &O,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    let Some(first) = trace.records.first() else {
        return Ok(T::zero());
    };
    let scale = factorial::<T>(cfg.p) / cfg.lp;
    let mut total = CompensatedScalar::default();
    for r in &trace.records {
        let field = op.eval(&r.x_half)?;
        total.add(r.lambda * scale * field.dot(&(&r.x_half - reference)));
        total.add(T::c(15.0 / 16.0) * r.omega_step);
        let spec = SubproblemSpec::new(op, r.x.clone(), cfg.p, cfg.lp, cfg.setup, cfg.set.clone())?;
        let u = spec.evaluate_u(&r.x_half)?;
        let slack = u.dot(&(&r.x_half - &r.x_next)).max(T::zero());
        total.add(-r.lambda * scale * slack);
    }
    total.add(-cfg.setup.omega(reference, &first.x));
    Ok(total.value())
}

/// Sampled lower estimate of `sup_{x ∈ set} ⟨g(x), x̂ − x⟩`: random probes,
/// `x̂` itself and the set centre, then projected gradient ascent from the
/// best few.
pub fn restricted_gap<T: Scalar, O: Operator<T> + ?Sized>(
    x_hat: &Vector<T>,
    op: &O,
    set: &FeasibleSet<T>,
    probes: usize,
    seed: u64,
) -> Result<T> {
    restricted_gap_with_candidates(x_hat, op, set, probes, seed, &[])
}

/// As [`restricted_gap`], also probing the supplied candidate points.
pub fn restricted_gap_with_candidates<T: Scalar, O: Operator<T> + ?Sized>(
    x_hat: &Vector<T>,
    op: &O,
    set: &FeasibleSet<T>,
    probes: usize,
    seed: u64,
    candidates: &[Vector<T>],
) -> Result<T> {
    if probes == 0 {
        return Err(Error::Configuration("restricted gap needs at least one probe".into()));
    }
    if !set.is_compact() {
        return Err(Error::UnboundedCertificate);
    }
    x_hat.check_dim(set.dim())?;
    let value = |x: &Vector<T>| -> Result<T> { Ok(op.eval(x)?.dot(&(x_hat - x))) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(T, Vector<T>)> = Vec::with_capacity(probes + 2 + candidates.len());
    for _ in 0..probes {
        let x = set.sample(&mut rng)?;
        scored.push((value(&x)?, x));
    }
    for x in [set.project(x_hat), set.center()].into_iter().chain(candidates.iter().map(|c| set.project(c))) {
        scored.push((value(&x)?, x));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = scored[0].0;
    for (start_value, start) in scored.into_iter().take(4) {
        let (mut x, mut fx) = (start, start_value);
        let mut step = T::one();
        for _ in 0..60 {
            let Ok(jac) = op.jacobian(&x) else { break };
            let g = op.eval(&x)?;
            let grad = jac.matvec_transpose(&(x_hat - &x)).add_scaled(-T::one(), &g);
            if grad.norm2() == T::zero() {
                break;
            }
            let mut improved = false;
            for _ in 0..30 {
                let trial = set.project(&x.add_scaled(step, &grad));
                let ft = value(&trial)?;
                if ft > fx {
                    x = trial;
                    fx = ft;
                    step = step * T::c(2.0);
                    improved = true;
                    break;
                }
                step = step / T::c(2.0);
            }
            if !improved {
                break;
            }
        }
        best = best.max(fx);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::operator::AffineOperator;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_f64_slice(x).unwrap()
    }

    #[test]
    fn lambda_schedule_values() {
        assert_eq!(lambda_schedule(7.0, 1).unwrap(), 0.5);
        assert_eq!(lambda_schedule(0.0, 1).unwrap(), 0.5);
        assert_eq!(lambda_schedule(4.0, 3).unwrap(), 0.125);
        assert!((lambda_schedule::<f64>(0.25, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(lambda_schedule(0.0, 2).is_err());
    }

    #[test]
    fn iteration_bounds() {
        assert!((theoretical_iteration_bound::<f64>(1, 1.0, 1.0, 1.0, false) - 32.0 / 15.0).abs() < 1e-14);
        let exact = theoretical_iteration_bound(2, 2.0, 1e-3, 9.0, false);
        assert!((exact - 16.0 / 15.0 * 2f64.powf(2.0 / 3.0) * 900.0).abs() < 1e-9);
        assert!((exact - 1523.9).abs() < 0.1);
        for p in 1..5 {
            let ratio: f64 = theoretical_iteration_bound(p, 3.0, 1e-2, 2.0, true)
                / theoretical_iteration_bound(p, 3.0, 1e-2, 2.0, false);
            assert!((ratio - 2f64.powf(2.0 / (p as f64 + 1.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_stays_put() {
        let op = AffineOperator::new(DenseMatrix::zeros(2, 2), v(&[0.0, 0.0])).unwrap();
        let start = v(&[0.3, -0.4]);
        let cfg = SolverConfig {
            p: 1,
            lp: 1.0,
            k: 5,
            oracle: OracleChoice::P1ClosedForm,
            setup: ProxSetup::Euclidean,
            set: FeasibleSet::whole_space(2),
            epsilon: None,
            start: start.clone(),
            record_timing: false,
        };
        let (avg, trace) = run(&op, &cfg).unwrap();
        assert!(avg.max_abs_diff(&start) <= 1e-16);
        assert_eq!(trace.records.len(), 6);
        assert!(trace.records.iter().all(|r| r.lambda == 0.5 && r.x_half == start));

        let cfg2 = SolverConfig {
            p: 2,
            oracle: OracleChoice::GenericInner { delta: Some(1e-9), max_inner: None, certification_radius: Some(2.0) },
            ..cfg
        };
        let (avg, trace) = run(&op, &cfg2).unwrap();
        assert!(trace.degenerate_exit);
        assert_eq!(avg, start);
    }

    #[test]
    fn incompatible_oracle_rejected() {
        let op = AffineOperator::new(DenseMatrix::identity(2), v(&[0.0, 0.0])).unwrap();
        let cfg = SolverConfig {
            p: 2,
            lp: 1.0,
            k: 1,
            oracle: OracleChoice::P1ClosedForm,
            setup: ProxSetup::Euclidean,
            set: FeasibleSet::whole_space(2),
            epsilon: None,
            start: v(&[0.0, 0.0]),
            record_timing: false,
        };
        let err = run(&op, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Configuration(_)));
        assert!(err.partial.records.is_empty());
    }

    #[test]
    fn gap_probe_at_self_is_zero() {
        let op = AffineOperator::new(DenseMatrix::identity(2), v(&[0.0, 0.0])).unwrap();
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        // x̂ = 0 is the strong solution, so every probe gives ⟨x, −x⟩ ≤ 0
        let g = restricted_gap(&v(&[0.0, 0.0]), &op, &ball, 50, 1).unwrap();
        assert!(g <= 0.0 && g > -1e-12);
    }
}
