//! Running one solver configuration on one instance.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{Context, Result};
use qbenders::benders::{
    decompose, seed_from_lp_relaxation, BendersSolver, CutKind, IterationRecord, LpSeed, Timings,
};
use qbenders::mip::branch_and_bound;
use qbenders::LpTolerances;
use qbenders::MipStatus;

use crate::config::{RunConfig, SolverKind};
use crate::instance::Instance;
use crate::report::{CutCounts, RunReport, SamplerSummary, REPORT_SCHEMA, SCHEMA_VERSION};

/// Report plus the per-iteration records behind it.
pub struct RunOutput {
    pub report: RunReport,
    pub records: Vec<IterationRecord>,
}

fn blank_report(inst: &Instance, cfg: &RunConfig) -> RunReport {
    RunReport {
        schema: REPORT_SCHEMA.into(),
        version: SCHEMA_VERSION,
        instance: inst.id.clone(),
        steps: inst.steps,
        solver: cfg.solver,
        seed: cfg.seed,
        config: cfg.clone(),
        status: String::new(),
        objective: None,
        lb_static: None,
        lb: None,
        gap: None,
        gap_static: None,
        reference_objective: None,
        gap_reference: None,
        iterations: 0,
        cuts: CutCounts::default(),
        valid_inequalities: 0,
        timings: Timings::default(),
        sampler: None,
        design: BTreeMap::new(),
    }
}

fn snake(debug: impl std::fmt::Debug) -> String {
    let s = format!("{debug:?}");
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

fn design(inst: &Instance, x: &[f64], y: &[f64]) -> BTreeMap<String, f64> {
    match &inst.mes {
        Some(mes) if !y.is_empty() => mes.design(x, y).into_iter().map(|(k, v)| (k.label().to_string(), v)).collect(),
        _ => BTreeMap::new(),
    }
}

/// Root LP relaxation value, the bound every gap is measured against.
pub fn static_lower_bound(inst: &Instance) -> Result<Option<f64>> {
    let (_, sub) = decompose(&inst.milp);
    Ok(match seed_from_lp_relaxation(&inst.milp, &sub, &LpTolerances::default())? {
        LpSeed::Feasible { lb_static, .. } => Some(lb_static),
        _ => None,
    })
}

pub fn run(inst: &Instance, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut report = blank_report(inst, cfg);
    let start = Instant::now();
    if cfg.solver == SolverKind::Direct {
        let out = branch_and_bound(&inst.milp, &cfg.bnb()).context("branch and bound")?;
        let total = start.elapsed().as_secs_f64();
        report.status = match out.status {
            MipStatus::Optimal => "optimal_within_gap".into(),
            s => snake(s),
        };
        if out.has_incumbent() {
            report.objective = Some(out.objective);
            report.design = design(inst, &out.x, &out.y);
        }
        report.lb = out.bound.is_finite().then_some(out.bound);
        report.gap = out.has_incumbent().then_some(out.gap);
        report.iterations = 1;
        // the whole solve counts as master time
        report.timings = Timings {
            master: total,
            subproblem: 0.0,
            data_processing: 0.0,
            total,
        };
        report.set_static_bound(static_lower_bound(inst)?);
        return Ok(RunOutput {
            report,
            records: Vec::new(),
        });
    }

    let mut solver = BendersSolver::new(&inst.milp, cfg.benders());
    if cfg.valid_inequalities {
        solver = solver.with_valid_inequalities(inst.valid_inequalities()).with_hints(inst.hints());
    }
    let out = solver.solve().context("benders")?;
    report.status = snake(out.status);
    report.objective = out.objective;
    report.lb = out.lb.is_finite().then_some(out.lb);
    report.gap = out.gap;
    report.set_static_bound(out.lb_static.is_finite().then_some(out.lb_static));
    report.iterations = out.iterations;
    report.cuts = CutCounts {
        optimality: out.cuts_of(CutKind::Optimality),
        feasibility: out.cuts_of(CutKind::Feasibility),
    };
    report.valid_inequalities = out.valid_inequalities;
    report.timings = out.timings;
    if out.objective.is_some() {
        report.design = design(inst, &out.x, &out.y);
    }
    if cfg.solver.uses_sampler() {
        let s = &out.sampler;
        let mock = cfg.solver == SolverKind::BendersMock;
        report.sampler = Some(SamplerSummary {
            reads: cfg.reads,
            repeats: cfg.repeats,
            sub_qubo_limit: cfg.sub_qubo_limit,
            sampler_iterations: s.sampler_iterations,
            calls: s.calls,
            tasks: s.tasks,
            device_time: mock.then_some(s.device_time),
            device_time_per_task: mock.then_some(cfg.device_time_ms / 1e3),
            early_stops: s.early_stops,
            max_qubo_bits: s.max_qubo_bits,
            repaired: s.repaired,
            penalty_escalations: s.penalty_escalations,
        });
    }
    Ok(RunOutput {
        report,
        records: out.records,
    })
}
