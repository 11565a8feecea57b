//! Run reports and the per-iteration run log.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qbenders::benders::{benders_gap, IterationRecord, Timings};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SolverKind};

pub const REPORT_SCHEMA: &str = "qbenders-report";
pub const LOG_SCHEMA: &str = "qbenders-log";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutCounts {
    pub optimality: usize,
    pub feasibility: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub reads: usize,
    pub repeats: usize,
    pub sub_qubo_limit: usize,
    /// Master solves handled by the sampler.
    pub sampler_iterations: usize,
    pub calls: usize,
    pub tasks: usize,
    /// Seconds of device time billed over the run; only for the mock annealer.
    pub device_time: Option<f64>,
    /// Seconds of device time billed per task; only for the mock annealer.
    pub device_time_per_task: Option<f64>,
    pub early_stops: usize,
    pub max_qubo_bits: usize,
    pub repaired: usize,
    pub penalty_escalations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub version: u32,
    pub instance: String,
    pub steps: Option<usize>,
    pub solver: SolverKind,
    pub seed: u64,
    pub config: RunConfig,
    /// `optimal_within_gap`, `iteration_limit`, `stalled`, `infeasible`,
    /// `unbounded` or `node_limit`.
    pub status: String,
    pub objective: Option<f64>,
    pub lb_static: Option<f64>,
    /// Bound the solver itself certified.
    pub lb: Option<f64>,
    /// `(UB − LB) / |LB|` against the certified bound.
    pub gap: Option<f64>,
    /// `(UB − LB_static) / |LB_static|`.
    pub gap_static: Option<f64>,
    pub reference_objective: Option<f64>,
    /// `(objective − reference) / |reference|`.
    pub gap_reference: Option<f64>,
    pub iterations: usize,
    pub cuts: CutCounts,
    pub valid_inequalities: usize,
    pub timings: Timings,
    pub sampler: Option<SamplerSummary>,
    /// Purchased capacity per unit, MES instances only.
    pub design: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn set_reference(&mut self, reference: Option<f64>) {
        self.reference_objective = reference;
        self.gap_reference = match (self.objective, reference) {
            (Some(v), Some(r)) if r != 0.0 => Some((v - r) / r.abs()),
            (Some(v), Some(_)) => Some(v),
            _ => None,
        };
    }

    pub fn set_static_bound(&mut self, lb_static: Option<f64>) {
        self.lb_static = lb_static;
        self.gap_static = match (self.objective, lb_static) {
            (Some(v), Some(lb)) => Some(benders_gap(v, lb)),
            _ => None,
        };
    }

    /// Process exit code: 0 solved, 3 stopped early, 4 infeasible,
    /// 5 unbounded. Errors exit with 1 and usage errors with 2.
    pub fn exit_code(&self) -> i32 {
        match self.status.as_str() {
            "optimal_within_gap" | "optimal" => 0,
            "infeasible" => 4,
            "unbounded" => 5,
            _ => 3,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.exit_code() == 0
    }
}

#[derive(Serialize)]
struct LogLine<'a, T: Serialize> {
    schema: &'static str,
    version: u32,
    #[serde(rename = "type")]
    kind: &'static str,
    instance: &'a str,
    solver: SolverKind,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct ResultLine<'a> {
    schema: &'static str,
    version: u32,
    #[serde(rename = "type")]
    kind: &'static str,
    report: &'a RunReport,
}

/// Writes one JSON line per iteration followed by a `result` line.
pub fn write_log(w: &mut dyn Write, report: &RunReport, records: &[IterationRecord]) -> Result<()> {
    for r in records {
        let line = LogLine {
            schema: LOG_SCHEMA,
            version: SCHEMA_VERSION,
            kind: "iteration",
            instance: &report.instance,
            solver: report.solver,
            body: r,
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    let line = ResultLine {
        schema: LOG_SCHEMA,
        version: SCHEMA_VERSION,
        kind: "result",
        report,
    };
    writeln!(w, "{}", serde_json::to_string(&line)?)?;
    Ok(())
}

/// Reads a report written by `solve --report`, or the `result` line of a
/// run log. Parse errors name the line and field.
pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(r) = serde_json::from_str::<RunReport>(&text) {
        return check_schema(r, path);
    }
    let lines: Vec<(usize, &str)> = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect();
    if lines.len() > 1 {
        for (i, line) in lines.iter().rev() {
            let v: serde_json::Value = serde_json::from_str(line)
                .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
            if v.get("type").and_then(|t| t.as_str()) == Some("result") {
                let r = serde_json::from_value::<RunReport>(v["report"].clone())
                    .with_context(|| format!("{}: line {}: field 'report'", path.display(), i + 1))?;
                return check_schema(r, path);
            }
        }
        bail!("{}: no result line in run log", path.display());
    }
    let r = serde_json::from_str::<RunReport>(&text).with_context(|| format!("{}: malformed report", path.display()))?;
    check_schema(r, path)
}

fn check_schema(r: RunReport, path: &Path) -> Result<RunReport> {
    if r.schema != REPORT_SCHEMA || r.version != SCHEMA_VERSION {
        bail!(
            "{}: field 'schema': expected {REPORT_SCHEMA} v{SCHEMA_VERSION}, got {} v{}",
            path.display(),
            r.schema,
            r.version
        );
    }
    Ok(r)
}
