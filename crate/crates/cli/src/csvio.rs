//! Trace and summary CSV emission.
//!
//! The trace schema is fixed: `iter,f,gap,grad_norm,dist_to_opt,inner_iters,
//! eta,wall_ms`, one row per outer iteration, missing quantities written as
//! empty fields (never zeros). Floats are printed with 17 significant digits
//! so files round-trip doubles losslessly. Wall-clock times are only written
//! when timing is explicitly requested; byte-identical reruns are the default
//! contract and timing breaks it.

use std::fmt::Write as _;
use std::path::Path;

use hgopt_core::solvers::RunTrace;

use crate::CliError;

pub const TRACE_HEADER: &str = "iter,f,gap,grad_norm,dist_to_opt,inner_iters,eta,wall_ms";

/// 17 significant digits: lossless f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Minimal CSV quoting for free-text fields (names can contain commas).
fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn trace_csv(trace: &RunTrace, include_timing: bool) -> String {
    let mut out = String::with_capacity(trace.records.len() * 96 + 64);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let wall = if include_timing { r.wall_ms } else { None };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.f),
            fmt_opt(r.gap),
            fmt_opt(r.grad_norm),
            fmt_opt(r.dist_to_opt),
            fmt_opt_usize(r.inner_iters),
            fmt_opt(r.eta),
            fmt_opt(wall),
        );
    }
    out
}

pub fn write_trace(path: &Path, trace: &RunTrace, include_timing: bool) -> Result<(), CliError> {
    std::fs::write(path, trace_csv(trace, include_timing))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub const SUMMARY_HEADER: &str = "run,algorithm,schedule,seed,manifold,objective,t_max,eta0,f0,\
final_f,final_gap,final_grad_norm,d0,zeta0,cert_eta_t_gap_max,cert_pass,monotone_max_increase,\
status,warnings";

/// One summary row per grid cell.
pub struct SummaryRow {
    pub run: String,
    pub algorithm: String,
    pub schedule: String,
    pub seed: u64,
    pub manifold: String,
    pub objective: String,
    pub t_max: usize,
    pub eta0: Option<f64>,
    pub f0: Option<f64>,
    pub final_f: Option<f64>,
    pub final_gap: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub d0: Option<f64>,
    pub zeta0: Option<f64>,
    pub cert_eta_t_gap_max: Option<f64>,
    pub cert_pass: Option<bool>,
    pub monotone_max_increase: Option<f64>,
    pub status: String,
    pub warnings: usize,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            quote(&r.run),
            quote(&r.algorithm),
            quote(&r.schedule),
            r.seed,
            quote(&r.manifold),
            quote(&r.objective),
            r.t_max,
            fmt_opt(r.eta0),
            fmt_opt(r.f0),
            fmt_opt(r.final_f),
            fmt_opt(r.final_gap),
            fmt_opt(r.final_grad_norm),
            fmt_opt(r.d0),
            fmt_opt(r.zeta0),
            fmt_opt(r.cert_eta_t_gap_max),
            r.cert_pass
                .map(|b| if b { "pass" } else { "fail" }.to_string())
                .unwrap_or_default(),
            fmt_opt(r.monotone_max_increase),
            quote(&r.status),
            r.warnings,
        );
    }
    out
}
