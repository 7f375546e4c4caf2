//! Configuration-driven benchmark harness for the highprox solvers.
//!
//! Verbs: `run`, `sweep`, `verify`, `schema`. Traces are CSV, summaries JSON.
//! Output files go where the config says, or into `$HIGHPROX_OUTPUT_DIR`
//! (file names kept) when that variable is set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use highprox::diagnostics::{fit_rate_exponent, run_suite, SuiteReport};
use highprox::solver::{run_monitored, theoretical_gap_bound, theoretical_iteration_bound, SolverTrace};
use highprox::Error;

use build::Built;
use config::ExperimentConfig;
use output::{trace_csv, write_atomic, SweepRow};

pub const OUTPUT_DIR_ENV: &str = "HIGHPROX_OUTPUT_DIR";
pub const TRACE_FORMAT: &str = "highprox-trace/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failed: {message}")]
    Solver { message: String, partial_trace: Option<PathBuf> },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("suite '{0}' reported failures")]
    SuiteFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::SuiteFailed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration(msg) => CliError::Config(msg),
            Error::DimensionMismatch { .. } | Error::UnsupportedOrder { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver { message: other.to_string(), partial_trace: None },
        }
    }
}

/// Everything a `run` produces, before it touches the disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv: String,
    pub summary: RunSummary,
    /// Set when the solver stopped early with an error.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub config_sha256: String,
    pub trace_format: String,
    pub instance: String,
    pub p: usize,
    pub lp: f64,
    pub k: usize,
    pub iterations_run: usize,
    pub oracle_calls: usize,
    pub degenerate_exit: bool,
    pub initial_gap: f64,
    pub final_gap: Option<f64>,
    /// Least-squares slope of log gap against log(iterations) at powers of two.
    pub fitted_exponent: Option<f64>,
    /// `ω(z*, z₀)` for the instance's known solution.
    pub omega_reference: f64,
    pub theoretical_gap_bound: f64,
    pub theoretical_iteration_bound: Option<f64>,
    pub lower_bound_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub version: String,
    pub config_sha256: String,
    pub instance: String,
    pub p: usize,
    pub lp: f64,
    pub rows: Vec<SweepRow>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    pub omega_reference: f64,
    pub theoretical_iteration_bound: Option<f64>,
    pub lower_bound_value: Option<f64>,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn version() -> String {
    format!("highprox {}", env!("CARGO_PKG_VERSION"))
}

fn fit_trace(trace: &SolverTrace<f64>) -> Option<f64> {
    let points: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| (r.iter + 1).is_power_of_two() && r.iter + 1 >= 8)
        .filter_map(|r| r.gap_estimate.map(|g| ((r.iter + 1) as f64, g)))
        .collect();
    fit_rate_exponent(&points, None).ok().map(|f| f.slope)
}

/// Runs one configured experiment entirely in memory.
pub fn execute_run(cfg: &ExperimentConfig, raw: &str, k_override: Option<usize>) -> Result<RunArtifacts, CliError> {
    let built = Built::new(&cfg.instance)?;
    let k = k_override
        .or(cfg.solver.k)
        .ok_or_else(|| CliError::Config("solver.k is required for run".into()))?;
    let solver = built.solver_config(cfg, k)?;
    built
        .with_operator(|op| solver.validate(op))
        .map_err(|e| match e {
            Error::Configuration(msg) => CliError::Config(msg),
            other => CliError::Config(other.to_string()),
        })?;
    let reference = built.reference()?;
    let omega_reference = solver.setup.omega(&reference, &solver.start);
    let initial_gap = built.gap(&solver.start)?;
    info!("running {} for K = {k}", cfg.kind());
    let outcome = built.with_operator(|op| run_monitored(op, &solver, |_, avg| built.gap(avg).map(Some)));
    let (trace, failure) = match outcome {
        Ok((_, trace)) => (trace, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    let final_gap = if failure.is_none() {
        match (trace.records.last().and_then(|r| r.gap_estimate), trace.degenerate_exit) {
            (_, true) => Some(built.gap(&trace.average)?),
            (g, false) => g,
        }
    } else {
        None
    };
    let summary = RunSummary {
        version: version(),
        config_sha256: config_hash(raw),
        trace_format: TRACE_FORMAT.into(),
        instance: cfg.kind().into(),
        p: solver.p,
        lp: solver.lp,
        k,
        iterations_run: trace.records.len(),
        oracle_calls: trace.oracle_calls(),
        degenerate_exit: trace.degenerate_exit,
        initial_gap,
        final_gap,
        fitted_exponent: fit_trace(&trace),
        omega_reference,
        theoretical_gap_bound: theoretical_gap_bound(solver.p, solver.lp, omega_reference, k),
        theoretical_iteration_bound: solver
            .epsilon
            .map(|eps| theoretical_iteration_bound(solver.p, solver.lp, eps, omega_reference, solver.is_approximate())),
        lower_bound_value: built.lower_bound_value(),
        error: failure.as_ref().map(|e| e.to_string()),
    };
    Ok(RunArtifacts { csv: trace_csv(&trace), summary, failure: failure.map(|e| e.to_string()) })
}

/// Where an output file lands: the env override directory (keeping the file
/// name) or the configured path.
pub fn resolve_output(configured: Option<&str>, default_name: &str) -> PathBuf {
    let path = PathBuf::from(configured.unwrap_or(default_name));
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            Path::new(&dir).join(path.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(default_name)))
        }
        _ => path,
    }
}

fn read_config(path: &Path) -> Result<(ExperimentConfig, String), CliError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let cfg = ExperimentConfig::parse(&raw)?;
    Ok((cfg, raw))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary types serialize");
    s.push('\n');
    s
}

/// `run <config>`: returns the written (trace, summary) paths.
pub fn run_command(config_path: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let (cfg, raw) = read_config(config_path)?;
    if cfg.solver.k.is_none() {
        return Err(CliError::Config("run needs solver.k; use sweep for solver.k_sweep".into()));
    }
    let artifacts = execute_run(&cfg, &raw, None)?;
    let trace_path = resolve_output(cfg.output.trace.as_deref(), "trace.csv");
    let summary_path = resolve_output(cfg.output.summary.as_deref(), "summary.json");
    write_atomic(&trace_path, &artifacts.csv)?;
    write_atomic(&summary_path, &to_json(&artifacts.summary))?;
    if let Some(message) = artifacts.failure {
        return Err(CliError::Solver { message, partial_trace: Some(trace_path) });
    }
    Ok((trace_path, summary_path))
}

/// One run per K in the sweep; returns the summary and combined CSV text.
pub fn execute_sweep(cfg: &ExperimentConfig, raw: &str) -> Result<(SweepSummary, String), CliError> {
    let ks = cfg
        .solver
        .k_sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs solver.k_sweep".into()))?;
    let mut rows = Vec::with_capacity(ks.len());
    let mut first: Option<RunSummary> = None;
    for &k in &ks {
        let art = execute_run(cfg, raw, Some(k))?;
        if let Some(message) = art.failure {
            return Err(CliError::Solver { message: format!("K = {k}: {message}"), partial_trace: None });
        }
        let s = art.summary;
        rows.push(SweepRow {
            k,
            gap: s.final_gap.unwrap_or(f64::NAN),
            theoretical_gap_bound: s.theoretical_gap_bound,
            oracle_calls: s.oracle_calls,
            lower_bound_value: s.lower_bound_value,
        });
        first.get_or_insert(s);
    }
    let first = first.expect("sweep has at least four entries");
    let points: Vec<(f64, f64)> = rows.iter().map(|r| ((r.k + 1) as f64, r.gap)).collect();
    let fit = fit_rate_exponent(&points, None).map_err(|e| CliError::Solver { message: e.to_string(), partial_trace: None })?;
    let summary = SweepSummary {
        version: version(),
        config_sha256: config_hash(raw),
        instance: first.instance,
        p: first.p,
        lp: first.lp,
        fitted_exponent: fit.slope,
        expected_exponent: -((first.p + 1) as f64) / 2.0,
        omega_reference: first.omega_reference,
        theoretical_iteration_bound: first.theoretical_iteration_bound,
        lower_bound_value: first.lower_bound_value,
        rows,
    };
    let csv = output::sweep_csv(&summary.rows);
    Ok((summary, csv))
}

pub fn sweep_command(config_path: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let (cfg, raw) = read_config(config_path)?;
    let (summary, csv) = execute_sweep(&cfg, &raw)?;
    let trace_path = resolve_output(cfg.output.trace.as_deref(), "sweep.csv");
    let summary_path = resolve_output(cfg.output.summary.as_deref(), "sweep.json");
    write_atomic(&trace_path, &csv)?;
    write_atomic(&summary_path, &to_json(&summary))?;
    Ok((trace_path, summary_path))
}

/// `verify <suite>`: the report as pretty JSON, or an error if any check failed.
pub fn verify_command(suite: &str) -> Result<String, (CliError, Option<String>)> {
    let report: SuiteReport = run_suite(suite).map_err(|e| (CliError::from(e), None))?;
    let text = to_json(&report);
    if report.passed {
        Ok(text)
    } else {
        Err((CliError::SuiteFailed(suite.into()), Some(text)))
    }
}
