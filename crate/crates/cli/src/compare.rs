//! Every solver on every instance, with shared seeds.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use log::warn;
use qbenders::benders::IterationRecord;
use serde::Serialize;

use crate::config::{RunConfig, SolverKind};
use crate::instance::{Instance, InstanceSource};
use crate::report::{write_log, RunReport};
use crate::run::run;

pub struct Cell {
    pub instance: String,
    pub steps: Option<usize>,
    pub solver: SolverKind,
    pub outcome: Result<(RunReport, Vec<IterationRecord>), String>,
}

impl Cell {
    pub fn report(&self) -> Option<&RunReport> {
        self.outcome.as_ref().ok().map(|(r, _)| r)
    }
}

pub struct Comparison {
    pub cells: Vec<Cell>,
    /// Instances where total times do not follow direct ≤ exact ≤ SA.
    pub ordering_flags: Vec<String>,
}

/// Runs cells one after another so timings do not interfere. A failing
/// cell is recorded and the run continues.
pub fn compare(sources: &[InstanceSource], solvers: &[SolverKind], base: &RunConfig) -> Comparison {
    let mut cells = Vec::new();
    for src in sources {
        let inst = match Instance::load(src) {
            Ok(i) => i,
            Err(e) => {
                for &solver in solvers {
                    cells.push(Cell {
                        instance: match src {
                            InstanceSource::File(p) => p.display().to_string(),
                            InstanceSource::Mes { steps, seed } => format!("mes_t{steps}_s{seed}"),
                        },
                        steps: None,
                        solver,
                        outcome: Err(format!("{e:#}")),
                    });
                }
                continue;
            }
        };
        let first = cells.len();
        for &solver in solvers {
            let cfg = RunConfig { solver, ..base.clone() };
            let outcome = run(&inst, &cfg).map(|o| (o.report, o.records)).map_err(|e| format!("{e:#}"));
            if let Err(e) = &outcome {
                warn!("{} {}: {e}", inst.id, solver.label());
            }
            cells.push(Cell {
                instance: inst.id.clone(),
                steps: inst.steps,
                solver,
                outcome,
            });
        }
        let reference = cells[first..]
            .iter()
            .filter(|c| c.solver == SolverKind::Direct)
            .filter_map(|c| c.report())
            .find(|r| r.is_solved())
            .and_then(|r| r.objective);
        for c in &mut cells[first..] {
            if let Ok((r, _)) = &mut c.outcome {
                r.set_reference(reference);
            }
        }
    }
    let ordering_flags = ordering_flags(&cells);
    for f in &ordering_flags {
        warn!("expected ordering not met: {f}");
    }
    Comparison { cells, ordering_flags }
}

fn ordering_flags(cells: &[Cell]) -> Vec<String> {
    let order = [SolverKind::Direct, SolverKind::BendersExact, SolverKind::BendersSa];
    let mut flags = Vec::new();
    let mut instances: Vec<&str> = cells.iter().map(|c| c.instance.as_str()).collect();
    instances.dedup();
    for inst in instances {
        let times: Vec<(SolverKind, f64)> = order
            .iter()
            .filter_map(|&s| {
                cells
                    .iter()
                    .find(|c| c.instance == inst && c.solver == s)
                    .and_then(|c| c.report())
                    .map(|r| (s, r.timings.total))
            })
            .collect();
        for w in times.windows(2) {
            if w[0].1 > w[1].1 {
                flags.push(format!(
                    "{inst}: {} took {:.3} s, more than {} at {:.3} s",
                    w[0].0.label(),
                    w[0].1,
                    w[1].0.label(),
                    w[1].1
                ));
            }
        }
    }
    flags
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    instance: &'a str,
    steps: Option<usize>,
    solver: &'static str,
    status: &'a str,
    objective: Option<f64>,
    gap: Option<f64>,
    gap_static: Option<f64>,
    gap_reference: Option<f64>,
    iterations: Option<usize>,
    optimality_cuts: Option<usize>,
    feasibility_cuts: Option<usize>,
    master: Option<f64>,
    subproblem: Option<f64>,
    data_processing: Option<f64>,
    total: Option<f64>,
    tasks: Option<usize>,
    device_time: Option<f64>,
    early_stops: Option<usize>,
    error: Option<&'a str>,
}

impl Comparison {
    pub fn write_summary(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.cells {
            let r = c.report();
            let s = r.and_then(|r| r.sampler.as_ref());
            out.serialize(SummaryRow {
                instance: &c.instance,
                steps: c.steps,
                solver: c.solver.label(),
                status: r.map_or("error", |r| r.status.as_str()),
                objective: r.and_then(|r| r.objective),
                gap: r.and_then(|r| r.gap),
                gap_static: r.and_then(|r| r.gap_static),
                gap_reference: r.and_then(|r| r.gap_reference),
                iterations: r.map(|r| r.iterations),
                optimality_cuts: r.map(|r| r.cuts.optimality),
                feasibility_cuts: r.map(|r| r.cuts.feasibility),
                master: r.map(|r| r.timings.master),
                subproblem: r.map(|r| r.timings.subproblem),
                data_processing: r.map(|r| r.timings.data_processing),
                total: r.map(|r| r.timings.total),
                tasks: s.map(|s| s.tasks),
                device_time: s.and_then(|s| s.device_time),
                early_stops: s.map(|s| s.early_stops),
                error: c.outcome.as_ref().err().map(String::as_str),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per instance: `x` is the step count (or the instance's
    /// position when it has none), then total seconds per solver.
    pub fn write_plot_data(&self, w: impl Write) -> Result<()> {
        let mut solvers: Vec<SolverKind> = self.cells.iter().map(|c| c.solver).collect();
        solvers.sort();
        solvers.dedup();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string()];
        header.extend(solvers.iter().map(|s| s.label().to_string()));
        out.write_record(&header)?;
        let mut instances: Vec<(&str, Option<usize>)> = self.cells.iter().map(|c| (c.instance.as_str(), c.steps)).collect();
        instances.dedup();
        for (k, (inst, steps)) in instances.iter().enumerate() {
            let mut row = vec![steps.unwrap_or(k + 1).to_string()];
            for s in &solvers {
                let v = self
                    .cells
                    .iter()
                    .find(|c| c.instance == *inst && c.solver == *s)
                    .and_then(|c| c.report())
                    .map(|r| r.timings.total.to_string())
                    .unwrap_or_default();
                row.push(v);
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_log(&self, w: &mut dyn Write) -> Result<()> {
        for c in &self.cells {
            if let Ok((r, records)) = &c.outcome {
                write_log(w, r, records)?;
            }
        }
        Ok(())
    }

    /// Writes `summary.csv`, `plot.csv`, `runs.jsonl` and `flags.txt`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_summary(std::fs::File::create(dir.join("summary.csv"))?)?;
        self.write_plot_data(std::fs::File::create(dir.join("plot.csv"))?)?;
        let mut log = std::io::BufWriter::new(std::fs::File::create(dir.join("runs.jsonl"))?);
        self.write_log(&mut log)?;
        log.flush()?;
        let mut flags = std::fs::File::create(dir.join("flags.txt"))?;
        for f in &self.ordering_flags {
            writeln!(flags, "{f}")?;
        }
        Ok(())
    }
}
