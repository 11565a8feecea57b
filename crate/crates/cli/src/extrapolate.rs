//! Best-case runtime of a mock-annealer run.
//!
//! Assumes the non-solver overhead could shrink by 90% and that each
//! master problem needs a single device task: best case =
//! `0.1 · data processing + subproblem + device time per task · master solves`.

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use crate::report::{RunReport, SCHEMA_VERSION};

pub const EXTRAPOLATION_SCHEMA: &str = "qbenders-extrapolation";
pub const DATA_PROCESSING_FACTOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Buckets {
    pub master: f64,
    pub subproblem: f64,
    pub data_processing: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub schema: String,
    pub version: u32,
    pub instance: String,
    pub raw: Buckets,
    pub best_case: Buckets,
    pub device_time_per_task: f64,
    /// Master solves, each billed as one task.
    pub master_solves: usize,
}

pub fn extrapolate(report: &RunReport) -> Result<Extrapolation> {
    let Some(s) = &report.sampler else {
        bail!("report for {} lacks device-time metadata (no sampler section)", report.instance);
    };
    let Some(per_task) = s.device_time_per_task else {
        bail!("report for {} lacks device-time metadata", report.instance);
    };
    let t = &report.timings;
    let master = per_task * s.sampler_iterations as f64;
    let data_processing = DATA_PROCESSING_FACTOR * t.data_processing;
    Ok(Extrapolation {
        schema: EXTRAPOLATION_SCHEMA.into(),
        version: SCHEMA_VERSION,
        instance: report.instance.clone(),
        raw: Buckets {
            master: t.master,
            subproblem: t.subproblem,
            data_processing: t.data_processing,
            total: t.total,
        },
        best_case: Buckets {
            master,
            subproblem: t.subproblem,
            data_processing,
            total: data_processing + t.subproblem + master,
        },
        device_time_per_task: per_task,
        master_solves: s.sampler_iterations,
    })
}
