use std::fmt::Write as _;

use elliptic_core::solver::{Diagnostics, EstimateReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Certified solve and every requested check passed.
    Ok,
    /// The solve finished but a residual or a check is out of tolerance.
    Failed,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub u: Vec<f64>,
    /// `w` for homogeneous and Dirichlet problems, the flux for Neumann ones.
    pub w: Vec<f64>,
    pub certificate_x: Vec<f64>,
    pub certificate_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub name: String,
    pub report: EstimateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub method: String,
    /// Max-norm distance between the solver's and the oracle's `u`.
    pub oracle_delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub pass: bool,
    pub detail: String,
    /// Named numbers backing the verdict.
    pub values: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    /// The effective configuration, overrides applied.
    pub config: serde_json::Value,
    pub solution: Option<SolutionReport>,
    pub diagnostics: Option<Diagnostics>,
    pub estimates: Vec<EstimateEntry>,
    pub oracle: Vec<OracleEntry>,
    pub checks: Vec<CheckOutcome>,
    pub error: Option<ErrorReport>,
    pub timing_ms: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

/// Renders a report. JSON keys are sorted at every level.
pub fn emit_report(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => {
            let value = serde_json::to_value(report).expect("reports serialize");
            let mut out = serde_json::to_string_pretty(&value).expect("values serialize");
            out.push('\n');
            out
        }
        Format::Text => text(report),
    }
}

fn text(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (schema {}): {:?}", r.command, r.schema_version, r.status);
    if let Some(e) = &r.error {
        let _ = writeln!(out, "error [{}]: {}", e.code, e.message);
    }
    if let Some(s) = &r.solution {
        let _ = writeln!(out, "u = {}", vector(&s.u));
    }
    if let Some(d) = &r.diagnostics {
        let _ = writeln!(out, "iterations: {}", d.iterations);
        for (k, v) in &d.residuals {
            let _ = writeln!(out, "  residual {k:<28} {v:.3e}");
        }
        for (k, v) in &d.norms {
            let _ = writeln!(out, "  norm     {k:<28} {v:.6e}");
        }
    }
    for e in &r.estimates {
        let _ = writeln!(
            out,
            "estimate {}: lhs {:.6e} <= rhs {:.6e}: {}",
            e.name,
            e.report.lhs,
            e.report.rhs,
            verdict(e.report.pass)
        );
    }
    for o in &r.oracle {
        let _ = writeln!(
            out,
            "oracle {}: delta {:.3e} (tol {:.1e}): {}",
            o.method,
            o.oracle_delta,
            o.tolerance,
            verdict(o.pass)
        );
    }
    for c in &r.checks {
        let _ = writeln!(out, "check {}: {} {}", c.check, verdict(c.pass), c.detail);
    }
    let _ = writeln!(out, "time: {:.1} ms", r.timing_ms);
    out
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> RunReport {
        RunReport {
            schema_version: 1,
            command: "solve".into(),
            status: Status::Ok,
            config: serde_json::Value::Null,
            solution: None,
            diagnostics: None,
            estimates: vec![],
            oracle: vec![],
            checks: vec![],
            error: None,
            timing_ms: 0.25,
        }
    }

    #[test]
    fn empty_lists_are_arrays() {
        let v: serde_json::Value = serde_json::from_str(&emit_report(&empty(), Format::Json)).unwrap();
        for key in ["estimates", "oracle", "checks"] {
            assert_eq!(v[key], serde_json::json!([]), "{key}");
        }
    }

    #[test]
    fn keys_are_sorted() {
        let json = emit_report(&empty(), Format::Json);
        let top: Vec<&str> = json
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
    }

    #[test]
    fn text_mentions_status() {
        let mut r = empty();
        r.status = Status::Error;
        r.error = Some(ErrorReport { code: "io_error".into(), message: "gone".into() });
        let t = emit_report(&r, Format::Text);
        assert!(t.contains("Error") && t.contains("io_error"));
    }
}
