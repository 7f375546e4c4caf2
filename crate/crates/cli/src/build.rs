//! Instance construction and per-instance gap evaluation.

use highprox::instances::{HardInstance, HardParams, MatrixGame, P2Params, P2Synthetic};
use highprox::solver::{restricted_gap_with_candidates, OracleChoice, SolverConfig};
use highprox::{DenseMatrix, FeasibleSet, Operator, ProxSetup, Vector};

use crate::config::{ExperimentConfig, InstanceConfig, OracleKind};
use crate::CliError;

pub enum Built {
    Hard(HardInstance<f64>),
    Game(MatrixGame<f64>),
    Synthetic { inst: P2Synthetic<f64>, ball: FeasibleSet<f64>, probes: usize, seed: u64 },
}

impl Built {
    pub fn new(cfg: &InstanceConfig) -> Result<Self, CliError> {
        Ok(match cfg {
            InstanceConfig::Hard { t, p, l_f, l_a, n, m } => {
                let mut params = HardParams::with_default_dims(*t, *p, *l_f, *l_a);
                params.n = n.unwrap_or(params.n);
                params.m = m.unwrap_or(params.m);
                Built::Hard(HardInstance::new(params)?)
            }
            InstanceConfig::MatrixGame { m, n, payoff, seed } => Built::Game(match payoff {
                Some(rows) => MatrixGame::new(DenseMatrix::from_rows(rows)?)?,
                None => MatrixGame::random(m.unwrap_or(0), n.unwrap_or(0), *seed)?,
            }),
            InstanceConfig::P2Synthetic { n, l2, skew_scale, mu, solution_norm, seed, gap_radius, gap_probes } => {
                let inst = P2Synthetic::new(P2Params {
                    n: *n,
                    l2: *l2,
                    skew_scale: *skew_scale,
                    mu: *mu,
                    solution_norm: *solution_norm,
                    seed: *seed,
                })?;
                Built::Synthetic {
                    inst,
                    ball: FeasibleSet::centered_ball(*n, *gap_radius)?,
                    probes: *gap_probes,
                    seed: *seed,
                }
            }
        })
    }

    pub fn with_operator<R>(&self, f: impl FnOnce(&dyn Operator<f64>) -> R) -> R {
        match self {
            Built::Hard(h) => f(&h.operator()),
            Built::Game(g) => f(&g.operator()),
            Built::Synthetic { inst, .. } => f(inst),
        }
    }

    pub fn set(&self) -> FeasibleSet<f64> {
        match self {
            Built::Hard(h) => h.feasible_set(),
            Built::Game(g) => g.feasible_set(),
            Built::Synthetic { inst, .. } => FeasibleSet::whole_space(inst.params().n),
        }
    }

    pub fn setup(&self) -> ProxSetup {
        match self {
            Built::Hard(h) => h.prox_setup(),
            Built::Game(g) => g.prox_setup(),
            Built::Synthetic { .. } => ProxSetup::Euclidean,
        }
    }

    pub fn default_start(&self) -> Vector<f64> {
        match self {
            Built::Hard(h) => Vector::zeros(h.params().n + h.params().m),
            Built::Game(g) => g.uniform_start(),
            Built::Synthetic { inst, .. } => Vector::zeros(inst.params().n),
        }
    }

    /// A known solution of the variational inequality.
    pub fn reference(&self) -> Result<Vector<f64>, CliError> {
        Ok(match self {
            Built::Hard(h) => {
                let opt = h.optimum();
                h.stack(&opt.x, &opt.y)
            }
            Built::Game(g) => {
                let eq = g.equilibrium()?;
                Vector::concat(&[&eq.x, &eq.y])
            }
            Built::Synthetic { inst, .. } => inst.solution().clone(),
        })
    }

    /// Exact duality gap (games), primal gap `φ(x̂) − ζ*` (hard instance), or
    /// the sampled restricted gap (synthetic).
    pub fn gap(&self, z: &Vector<f64>) -> highprox::Result<f64> {
        match self {
            Built::Hard(h) => {
                let (x, _) = h.split(z);
                Ok(h.primal_value(&x)? - h.optimum().value)
            }
            Built::Game(g) => g.exact_gap(z),
            Built::Synthetic { inst, ball, probes, seed } => {
                restricted_gap_with_candidates(z, inst, ball, *probes, *seed, &[inst.solution().clone()])
            }
        }
    }

    pub fn lower_bound_value(&self) -> Option<f64> {
        match self {
            Built::Hard(h) => Some(h.lower_bound_value()),
            _ => None,
        }
    }

    pub fn solver_config(&self, cfg: &ExperimentConfig, k: usize) -> Result<SolverConfig<f64>, CliError> {
        let s = &cfg.solver;
        let declared = self.with_operator(|op| op.smoothness());
        let lp = match s.lp {
            Some(v) => v,
            None if declared.order == s.p => declared.constant,
            None => {
                return Err(CliError::Config(format!(
                    "solver.lp is required: the instance declares order-{} smoothness, not order {}",
                    declared.order, s.p
                )))
            }
        };
        let oracle = match s.oracle {
            OracleKind::P1ClosedForm => OracleChoice::P1ClosedForm,
            OracleKind::P2Bisection => OracleChoice::P2Bisection { delta: s.delta, mu: s.mu.unwrap_or(0.0) },
            OracleKind::GenericInner => OracleChoice::GenericInner {
                delta: s.delta,
                max_inner: s.max_inner,
                certification_radius: s.certification_radius,
            },
        };
        let start = match &s.start {
            Some(v) => Vector::new(v.clone())?,
            None => self.default_start(),
        };
        Ok(SolverConfig {
            p: s.p,
            lp,
            k,
            oracle,
            setup: s.prox.unwrap_or(self.setup()),
            set: self.set(),
            epsilon: s.epsilon,
            start,
            record_timing: cfg.output.record_timing,
        })
    }
}
