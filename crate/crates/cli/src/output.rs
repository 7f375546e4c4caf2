//! CSV rendering and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use highprox::solver::SolverTrace;

use crate::CliError;

pub const TRACE_HEADER: &str =
    "iter,lambda_i,omega_step,oracle_delta,inner_iters,gap_estimate,cumulative_oracle_calls,wall_time_ms";
pub const SWEEP_HEADER: &str = "k,gap,theoretical_gap_bound,oracle_calls,lower_bound_value";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub gap: f64,
    pub theoretical_gap_bound: f64,
    pub oracle_calls: usize,
    pub lower_bound_value: Option<f64>,
}

/// 17 significant digits, round-trip exact.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn trace_csv(trace: &SolverTrace<f64>) -> String {
    let mut out = String::with_capacity(120 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push_str("\r\n");
    for r in &trace.records {
        let gap = r.gap_estimate.map(fmt_real).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}\r\n",
            r.iter,
            fmt_real(r.lambda),
            fmt_real(r.omega_step),
            fmt_real(r.oracle_delta),
            r.inner_iters,
            gap,
            r.iter + 1,
            fmt_real(r.wall_time_ms)
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push_str("\r\n");
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{}\r\n",
            r.k,
            fmt_real(r.gap),
            fmt_real(r.theoretical_gap_bound),
            r.oracle_calls,
            r.lower_bound_value.map(fmt_real).unwrap_or_default()
        );
    }
    out
}

/// Write to a sibling temp file, then rename over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.into(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(fmt_real(f64::NAN), "NaN");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
