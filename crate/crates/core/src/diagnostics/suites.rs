//! Named property suites with machine-readable per-check residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{estimate_lp, monotonicity_audit, power_mean_check, restricted_f_descent, restricted_residual_least_squares};
use crate::error::{Error, Result};
use crate::geometry::{bregman_three_point_residual, tseng_inequality_check, FeasibleSet, ProxSetup};
use crate::instances::{HardInstance, HardParams, MatrixGame, P2Params, P2Synthetic};
use crate::linalg::{DenseMatrix, Vector};
use crate::operator::{taylor_remainder_bound, taylor_remainder_norm, Operator, Smoothness};
use crate::oracles::{solve_inner, SubproblemSpec};
use crate::subp2::{solve_so_vi, Subp2Config};

pub const SUITES: [&str; 7] = ["bregman", "tseng", "power-mean", "hard-instance-kkt", "taylor-remainder", "subproblem", "all"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst residual observed, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Tracks the worst residual where `residual ≤ tolerance` passes.
struct Upper {
    name: &'static str,
    worst: f64,
    tolerance: f64,
    cases: usize,
}

impl Upper {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, worst: f64::NEG_INFINITY, tolerance, cases: 0 }
    }

    fn record(&mut self, residual: f64) {
        self.cases += 1;
        self.worst = if residual.is_nan() { f64::INFINITY } else { self.worst.max(residual) };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            passed: self.cases > 0 && self.worst <= self.tolerance,
            worst: self.worst,
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let checks = match name {
        "bregman" => bregman()?,
        "tseng" => tseng()?,
        "power-mean" => power_mean()?,
        "hard-instance-kkt" => hard_instance_kkt()?,
        "taylor-remainder" => taylor_remainder()?,
        "subproblem" => subproblem()?,
        "all" => {
            let mut all = Vec::new();
            for s in SUITES.iter().filter(|s| **s != "all") {
                for mut c in run_suite(s)?.checks {
                    c.name = format!("{s}/{}", c.name);
                    all.push(c);
                }
            }
            all
        }
        other => return Err(Error::Configuration(format!("unknown suite '{other}'; expected one of {SUITES:?}"))),
    };
    Ok(SuiteReport { suite: name.into(), passed: checks.iter().all(|c| c.passed), checks })
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vector<f64> {
    Vector::from_raw((0..n).map(|_| StandardNormal.sample(rng)).collect())
}

fn bregman() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cube = FeasibleSet::boxed(Vector::filled(6, -5.0), Vector::filled(6, 5.0))?;
    let simplex = FeasibleSet::<f64>::simplex(6);
    let mut three_e = Upper::new("three-point-euclidean", 1e-9);
    let mut three_h = Upper::new("three-point-entropy", 1e-9);
    let mut lower_e = Upper::new("omega-dominates-norm-euclidean", 1e-12);
    let mut lower_h = Upper::new("omega-dominates-norm-entropy", 1e-12);
    for _ in 0..1000 {
        let (x, y, z) = (cube.sample(&mut rng)?, cube.sample(&mut rng)?, cube.sample(&mut rng)?);
        three_e.record(bregman_three_point_residual(ProxSetup::Euclidean, &x, &y, &z));
        lower_e.record((&x - &y).norm2_squared() - ProxSetup::Euclidean.omega(&x, &y));
        let (x, y, z) = (simplex.sample(&mut rng)?, simplex.sample(&mut rng)?, simplex.sample(&mut rng)?);
        three_h.record(bregman_three_point_residual(ProxSetup::Entropy, &x, &y, &z));
        let l1 = (&x - &y).norm1();
        lower_h.record(l1 * l1 - ProxSetup::Entropy.omega(&x, &y));
    }
    Ok(vec![three_e.finish(), three_h.finish(), lower_e.finish(), lower_h.finish()])
}

fn tseng() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ball = FeasibleSet::centered_ball(5, 2.0)?;
    let cube = FeasibleSet::boxed(Vector::filled(5, -1.0), Vector::filled(5, 1.0))?;
    let simplex = FeasibleSet::<f64>::simplex(5);
    let mut check = Upper::new("prox-inequality-slack", 1e-9);
    for i in 0..500 {
        let (setup, set) = match i % 3 {
            0 => (ProxSetup::Euclidean, &ball),
            1 => (ProxSetup::Euclidean, &cube),
            _ => (ProxSetup::Entropy, &simplex),
        };
        let anchor = set.sample(&mut rng)?;
        let probe = set.sample(&mut rng)?;
        let linear = gaussian(&mut rng, 5).scale(rng.random_range(0.1..5.0));
        check.record(-tseng_inequality_check(setup, set, &anchor, &linear, &probe)?);
    }
    Ok(vec![check.finish()])
}

fn power_mean() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = 0usize;
    for trial in 0..10_000 {
        let len = rng.random_range(1..60);
        let xi: Vec<f64> = (0..len).map(|_| rng.random_range(1e-3..3.0)).collect();
        let squares: f64 = xi.iter().map(|v| v * v).sum();
        let r = squares * (1.0 + rng.random_range(0.0..2.0));
        let q = (trial % 3 + 1) as f64;
        if !power_mean_check(&xi, q, r)? {
            failures += 1;
        }
    }
    Ok(vec![CheckResult { name: "power-mean-lower-bound".into(), passed: failures == 0, worst: failures as f64, tolerance: 0.0, cases: 10_000 }])
}

fn hard_instance_kkt() -> Result<Vec<CheckResult>> {
    let mut feas = Upper::new("constraint-residual", 1e-12);
    let mut stat = Upper::new("stationarity-residual", 1e-10);
    let mut value = Upper::new("optimal-value", 1e-10);
    let mut radius = Upper::new("optimum-inside-ball", 0.0);
    for t in 1..=10 {
        for p in [2, 3] {
            for l_a in [0.0, 1.0] {
                let inst = HardInstance::<f64>::new(HardParams::with_default_dims(t, p, 1.0, l_a))?;
                let opt = inst.optimum();
                feas.record(inst.a().matvec(&opt.x).add_scaled(-1.0, inst.b()).norm_inf());
                stat.record(inst.grad_f(&opt.x)?.add_scaled(1.0, &inst.a().matvec_transpose(&opt.y)).norm_inf());
                value.record((inst.zeta(&opt.x, &opt.y)? - opt.value).abs());
                radius.record(opt.x.norm2_squared() - 3.0 * ((t + 1) as f64).powi(3));
            }
        }
    }
    let mut f_min = Upper::new("restricted-f-minimum-relative", 1e-4);
    let mut r_min = Upper::new("restricted-residual-minimum-relative", 1e-6);
    for t in 1..=5 {
        for l_a in [0.0, 1.0] {
            let inst = HardInstance::<f64>::new(HardParams::with_default_dims(t, 2, 1.0, l_a))?;
            let exact = inst.restricted_f_minimum();
            f_min.record(((restricted_f_descent(&inst, 100_000)? - exact) / exact).abs());
            if l_a > 0.0 {
                let exact = inst.restricted_residual_minimum();
                r_min.record(((restricted_residual_least_squares(&inst)? - exact) / exact).abs());
            }
        }
    }
    let mut mono = Upper::new("monotonicity", 1e-10);
    for p in [2, 3] {
        let inst = HardInstance::<f64>::new(HardParams::with_default_dims(2, p, 1.0, 1.0))?;
        let report = monotonicity_audit(&inst.operator(), &inst.feasible_set(), 50, 14)?;
        mono.record(-report.min_pairing.min(report.min_eigenvalue));
    }
    Ok(vec![feas.finish(), stat.finish(), value.finish(), radius.finish(), f_min.finish(), r_min.finish(), mono.finish()])
}

fn remainder_ratio<O: Operator<f64> + ?Sized>(op: &O, region: &FeasibleSet<f64>, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = op.norm();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let x = region.sample(&mut rng)?;
        let y = region.sample(&mut rng)?;
        let rem = taylor_remainder_norm(op, &x, &y, norm)?;
        let bound = taylor_remainder_bound(op, &x, &y, norm);
        worst = worst.max(rem - bound * (1.0 + 1e-9) - 1e-12);
    }
    Ok(worst)
}

fn taylor_remainder() -> Result<Vec<CheckResult>> {
    let mut bound = Upper::new("remainder-within-bound", 0.0);
    let mut estimate = Upper::new("estimate-below-declared", 0.0);
    let mut audit = |op: &dyn Operator<f64>, region: &FeasibleSet<f64>, seed: u64| -> Result<()> {
        bound.record(remainder_ratio(op, region, 200, seed)?);
        let Smoothness { order, constant } = op.smoothness();
        estimate.record(estimate_lp(op, order, region, 400, seed)? - constant * (1.0 + 1e-9));
        Ok(())
    };
    for (t, p, l_a) in [(1, 2, 0.0), (2, 2, 1.0), (1, 3, 0.5), (2, 3, 1.0)] {
        let inst = HardInstance::<f64>::new(HardParams::with_default_dims(t, p, 1.0, l_a))?;
        audit(&inst.operator(), &inst.feasible_set(), 20 + t as u64)?;
    }
    let game = MatrixGame::<f64>::random(6, 5, 21)?;
    audit(&game.operator(), &game.feasible_set(), 22)?;
    for (mu, skew) in [(0.0, 1.0), (0.1, 2.0)] {
        let synth = P2Synthetic::<f64>::new(P2Params { n: 8, l2: 2.0, skew_scale: skew, mu, solution_norm: 3.0, seed: 23 })?;
        audit(&synth, &FeasibleSet::centered_ball(8, 5.0)?, 24)?;
    }
    Ok(vec![bound.finish(), estimate.finish()])
}

/// `g(x) = Mx + c + (L₂/2)|x|∘x` with `M` symmetric positive definite.
pub(crate) struct SpdCubic {
    m: DenseMatrix<f64>,
    c: Vector<f64>,
    l2: f64,
}

impl SpdCubic {
    pub(crate) fn random(n: usize, l2: f64, floor: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DenseMatrix::new(n, n, (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect())?;
        let m = g.matmul(&g.transpose()).scale(1.0 / n as f64).shifted(floor);
        Ok(Self { m, c: gaussian(&mut rng, n), l2 })
    }
}

impl Operator<f64> for SpdCubic {
    fn dim(&self) -> usize {
        self.c.dim()
    }

    fn max_derivative_order(&self) -> usize {
        1
    }

    fn smoothness(&self) -> Smoothness<f64> {
        Smoothness { order: 2, constant: self.l2 }
    }

    fn eval(&self, x: &Vector<f64>) -> Result<Vector<f64>> {
        let mut out = self.m.matvec(x).add_scaled(1.0, &self.c);
        for i in 0..x.dim() {
            out[i] += self.l2 / 2.0 * x[i].abs() * x[i];
        }
        Ok(out)
    }

    fn jacobian(&self, x: &Vector<f64>) -> Result<DenseMatrix<f64>> {
        let mut j = self.m.clone();
        for i in 0..x.dim() {
            j[(i, i)] += self.l2 * x[i].abs();
        }
        Ok(j)
    }
}

/// One cross-check instance: `(distance between solvers, residual of U at the
/// bisection solution, shifted solves, allowed shifted solves)`.
pub fn subproblem_case(index: usize) -> Result<(f64, f64, usize, usize)> {
    let n = 5 + index * 45 / 19;
    let (l2, mu, delta) = (1.0, 0.5, 1e-8);
    let op = SpdCubic::random(n, l2, mu, 100 + index as u64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(200 + index as u64);
    let center = {
        let g = gaussian(&mut rng, n);
        g.scale(1.0 / g.norm2())
    };
    let fnorm = op.eval(&center)?.norm2();
    let out = solve_so_vi(&op, &center, &Subp2Config::new(l2, delta, mu)?)?;
    let spec = SubproblemSpec::new(&op, center, 2, l2, ProxSetup::Euclidean, FeasibleSet::whole_space(n))?;
    let residual = spec.evaluate_u(&out.oracle.solution)?.norm2();
    let inner = solve_inner(&spec, 1e-12, 400_000)?;
    let distance = inner.solution.add_scaled(-1.0, &out.oracle.solution).norm2();
    let allowed = ((fnorm * fnorm) / (delta * delta * mu * mu)).log2().ceil() as usize + 2;
    Ok((distance, residual, out.shifted_solves, allowed))
}

fn subproblem() -> Result<Vec<CheckResult>> {
    let mut agree = Upper::new("bisection-matches-generic", 1e-5);
    let mut residual = Upper::new("bisection-residual", 1e-6);
    let mut calls = Upper::new("shifted-solves-over-allowance", 0.0);
    for i in 0..20 {
        let (d, r, used, allowed) = subproblem_case(i)?;
        agree.record(d);
        residual.record(r);
        calls.record(used as f64 - allowed as f64);
    }
    Ok(vec![agree.finish(), residual.finish(), calls.finish()])
}
