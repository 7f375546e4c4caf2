//! Experiment configuration: parsing and validation.

use serde::{Deserialize, Serialize};

use highprox::ProxSetup;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceConfig,
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceConfig {
    Hard {
        t: usize,
        p: usize,
        l_f: f64,
        l_a: f64,
        n: Option<usize>,
        m: Option<usize>,
    },
    MatrixGame {
        /// Rows (maximizing player's strategies).
        m: Option<usize>,
        /// Columns (minimizing player's strategies).
        n: Option<usize>,
        payoff: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seed: u64,
    },
    P2Synthetic {
        n: usize,
        l2: f64,
        #[serde(default = "one")]
        skew_scale: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default = "three")]
        solution_norm: f64,
        #[serde(default)]
        seed: u64,
        /// Radius of the origin-centred ball the restricted gap is taken over.
        #[serde(default = "five")]
        gap_radius: f64,
        #[serde(default = "sixty_four")]
        gap_probes: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

fn five() -> f64 {
    5.0
}

fn sixty_four() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    P1ClosedForm,
    P2Bisection,
    GenericInner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub p: usize,
    /// Overrides the instance's declared constant.
    pub lp: Option<f64>,
    pub k: Option<usize>,
    pub k_sweep: Option<Vec<usize>>,
    pub oracle: OracleKind,
    pub prox: Option<ProxSetup>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Strong-monotonicity modulus handed to the bisection oracle.
    pub mu: Option<f64>,
    pub max_inner: Option<usize>,
    pub certification_radius: Option<f64>,
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub trace: Option<String>,
    pub summary: Option<String>,
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Parses and validates; parse errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let s = &self.solver;
        if s.p == 0 {
            return bad("solver.p must be at least 1".into());
        }
        match (&s.k, &s.k_sweep) {
            (Some(_), Some(_)) => return bad("solver.k and solver.k_sweep are mutually exclusive".into()),
            (None, None) => return bad("one of solver.k or solver.k_sweep is required".into()),
            (None, Some(list)) => {
                if list.len() < 4 {
                    return bad(format!("solver.k_sweep needs at least 4 entries to fit a rate, got {}", list.len()));
                }
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("solver.k_sweep must be strictly increasing".into());
                }
            }
            (Some(_), None) => {}
        }
        for (name, v) in [("lp", s.lp), ("delta", s.delta), ("epsilon", s.epsilon), ("mu", s.mu), ("certification_radius", s.certification_radius)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("solver.{name} must be positive and finite, got {v}"));
                }
            }
        }
        match s.oracle {
            OracleKind::P1ClosedForm if s.p != 1 => return bad("oracle p1-closed-form requires p = 1".into()),
            OracleKind::P2Bisection => {
                if s.p != 2 {
                    return bad("oracle p2-bisection requires p = 2".into());
                }
                if s.mu.is_none() {
                    return bad("oracle p2-bisection requires solver.mu".into());
                }
                if s.delta.is_none() && s.epsilon.is_none() {
                    return bad("oracle p2-bisection requires solver.delta or solver.epsilon".into());
                }
                if !matches!(self.instance, InstanceConfig::P2Synthetic { .. }) {
                    return bad("oracle p2-bisection needs an unconstrained instance (p2-synthetic)".into());
                }
            }
            OracleKind::GenericInner if s.p > 1 && s.delta.is_none() && s.epsilon.is_none() => {
                return bad("oracle generic-inner requires solver.delta or solver.epsilon".into());
            }
            _ => {}
        }
        match &self.instance {
            InstanceConfig::Hard { .. } => {
                if s.oracle == OracleKind::GenericInner && s.prox == Some(ProxSetup::Entropy) {
                    return bad("the hard instance uses the Euclidean prox".into());
                }
            }
            InstanceConfig::MatrixGame { m, n, payoff, .. } => match (payoff, m, n) {
                (Some(rows), _, _) => {
                    if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                        return bad("instance.payoff must be a nonempty rectangular matrix".into());
                    }
                }
                (None, Some(m), Some(n)) if *m > 0 && *n > 0 => {}
                _ => return bad("instance needs either payoff or positive m and n".into()),
            },
            InstanceConfig::P2Synthetic { gap_radius, gap_probes, .. } => {
                if !(*gap_radius > 0.0) {
                    return bad("instance.gap_radius must be positive".into());
                }
                if *gap_probes == 0 {
                    return bad("instance.gap_probes must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self.instance {
            InstanceConfig::Hard { .. } => "hard",
            InstanceConfig::MatrixGame { .. } => "matrix-game",
            InstanceConfig::P2Synthetic { .. } => "p2-synthetic",
        }
    }
}

/// JSON Schema (draft 2020-12) of [`ExperimentConfig`].
pub fn schema() -> serde_json::Value {
    use serde_json::json;
    let pos = json!({"type": "number", "exclusiveMinimum": 0});
    let count = json!({"type": "integer", "minimum": 0});
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "highprox experiment",
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "instance", "solver"],
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "instance": {"oneOf": [
                {
                    "type": "object", "additionalProperties": false,
                    "required": ["kind", "t", "p", "l_f", "l_a"],
                    "properties": {
                        "kind": {"const": "hard"}, "t": {"type": "integer", "minimum": 1},
                        "p": {"type": "integer", "minimum": 2}, "l_f": pos, "l_a": {"type": "number", "minimum": 0},
                        "n": count, "m": count
                    }
                },
                {
                    "type": "object", "additionalProperties": false,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "matrix-game"}, "m": count, "n": count, "seed": count,
                        "payoff": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
                    }
                },
                {
                    "type": "object", "additionalProperties": false,
                    "required": ["kind", "n", "l2"],
                    "properties": {
                        "kind": {"const": "p2-synthetic"}, "n": count, "l2": pos,
                        "skew_scale": {"type": "number", "minimum": 0, "default": 1.0},
                        "mu": {"type": "number", "minimum": 0, "default": 0.0},
                        "solution_norm": {"type": "number", "minimum": 0, "default": 3.0},
                        "seed": count, "gap_radius": pos, "gap_probes": {"type": "integer", "minimum": 1}
                    }
                }
            ]},
            "solver": {
                "type": "object", "additionalProperties": false,
                "required": ["p", "oracle"],
                "properties": {
                    "p": {"type": "integer", "minimum": 1}, "lp": pos, "k": count,
                    "k_sweep": {"type": "array", "items": count, "minItems": 4},
                    "oracle": {"enum": ["p1-closed-form", "p2-bisection", "generic-inner"]},
                    "prox": {"enum": ["euclidean", "entropy"]},
                    "delta": pos, "epsilon": pos, "mu": pos, "max_inner": count, "certification_radius": pos,
                    "start": {"type": "array", "items": {"type": "number"}}
                }
            },
            "output": {
                "type": "object", "additionalProperties": false,
                "properties": {
                    "trace": {"type": "string"}, "summary": {"type": "string"},
                    "record_timing": {"type": "boolean", "default": false}
                }
            }
        }
    })
}
