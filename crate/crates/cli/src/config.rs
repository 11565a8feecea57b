//! Run configuration.
//!
//! Values come from three layers, later ones winning: built-in defaults, a
//! TOML file (`--config`), then command-line flags. Every key is optional
//! in the file and on the command line.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use qbenders::benders::{BendersConfig, MasterBackend};
use qbenders::sampler::MockDevice;
use qbenders::{BranchAndBoundConfig, SamplerParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Branch and bound on the full MILP.
    Direct,
    /// Benders with a branch-and-bound master.
    BendersExact,
    /// Benders with simulated annealing on the whole master QUBO.
    BendersSa,
    /// Benders with the decomposing mock annealer.
    BendersMock,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Direct,
        SolverKind::BendersExact,
        SolverKind::BendersSa,
        SolverKind::BendersMock,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::BendersExact => "benders-exact",
            SolverKind::BendersSa => "benders-sa",
            SolverKind::BendersMock => "benders-mock",
        }
    }

    pub fn uses_sampler(self) -> bool {
        matches!(self, SolverKind::BendersSa | SolverKind::BendersMock)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub seed: u64,
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub multi_cut: usize,
    pub delta_zeta: f64,
    /// Add the instance's valid inequalities and hints when it has them.
    pub valid_inequalities: bool,
    pub early_stop: bool,
    pub repair_samples: bool,
    pub reads: usize,
    pub repeats: usize,
    pub sub_qubo_limit: usize,
    pub sweeps: Option<usize>,
    pub t_lo: Option<f64>,
    pub queue_latency_ms: f64,
    pub device_time_ms: f64,
    pub device_capacity: usize,
    pub node_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::BendersExact,
            seed: 0,
            gap_tol: 0.05,
            max_iterations: 60,
            multi_cut: 1,
            delta_zeta: 0.1,
            valid_inequalities: true,
            early_stop: true,
            repair_samples: true,
            reads: 100,
            repeats: 5,
            sub_qubo_limit: 160,
            sweeps: None,
            t_lo: None,
            queue_latency_ms: 0.0,
            device_time_ms: 20.0,
            device_capacity: 160,
            node_limit: 200_000,
        }
    }
}

/// One layer of overrides; also the config file schema and the flag set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// Seed for every random choice of the solver.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub multi_cut: Option<usize>,
    #[arg(long)]
    pub delta_zeta: Option<f64>,
    #[arg(long)]
    pub valid_inequalities: Option<bool>,
    #[arg(long)]
    pub early_stop: Option<bool>,
    #[arg(long)]
    pub repair_samples: Option<bool>,
    #[arg(long)]
    pub reads: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub sub_qubo_limit: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub t_lo: Option<f64>,
    #[arg(long)]
    pub queue_latency_ms: Option<f64>,
    #[arg(long)]
    pub device_time_ms: Option<f64>,
    #[arg(long)]
    pub device_capacity: Option<usize>,
    #[arg(long)]
    pub node_limit: Option<usize>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config file {}", path.display()))
    }
}

macro_rules! overlay {
    ($cfg:expr, $layer:expr, $($f:ident),*) => {
        $(if let Some(v) = $layer.$f.clone() { $cfg.$f = v; })*
    };
}

impl RunConfig {
    pub fn apply(mut self, layer: &ConfigLayer) -> Self {
        overlay!(
            self, layer, solver, seed, gap_tol, max_iterations, multi_cut, delta_zeta, valid_inequalities,
            early_stop, repair_samples, reads, repeats, sub_qubo_limit, queue_latency_ms, device_time_ms,
            device_capacity, node_limit
        );
        if layer.sweeps.is_some() {
            self.sweeps = layer.sweeps;
        }
        if layer.t_lo.is_some() {
            self.t_lo = layer.t_lo;
        }
        self
    }

    /// Defaults, then the file, then the flags.
    pub fn resolve(file: Option<&ConfigLayer>, flags: &ConfigLayer) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg = cfg.apply(f);
        }
        cfg = cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("queue_latency_ms", self.queue_latency_ms),
            ("device_time_ms", self.device_time_ms),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("field '{name}': must be finite and non-negative, got {v}");
            }
        }
        if self.device_capacity == 0 {
            bail!("field 'device_capacity': must be at least 1");
        }
        self.sampler_params().validate().map_err(|e| anyhow::anyhow!("sampler settings: {e}"))?;
        self.benders().validate().map_err(|e| anyhow::anyhow!("benders settings: {e}"))?;
        Ok(())
    }

    pub fn sampler_params(&self) -> SamplerParams {
        SamplerParams {
            reads: self.reads,
            repeats: self.repeats,
            sub_qubo_limit: self.sub_qubo_limit,
            sweeps: self.sweeps,
            t_lo: self.t_lo,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn device(&self) -> MockDevice {
        MockDevice {
            queue_latency: Duration::from_secs_f64(self.queue_latency_ms / 1e3),
            device_time_per_task: Duration::from_secs_f64(self.device_time_ms / 1e3),
            capacity: self.device_capacity,
        }
    }

    pub fn bnb(&self) -> BranchAndBoundConfig {
        BranchAndBoundConfig {
            node_limit: self.node_limit,
            ..Default::default()
        }
    }

    pub fn benders(&self) -> BendersConfig {
        let backend = match self.solver {
            SolverKind::Direct | SolverKind::BendersExact => MasterBackend::BranchAndBound,
            SolverKind::BendersSa => MasterBackend::Annealing {
                params: self.sampler_params(),
            },
            SolverKind::BendersMock => MasterBackend::MockAnnealer {
                params: self.sampler_params(),
                device: self.device(),
            },
        };
        BendersConfig {
            gap_tol: self.gap_tol,
            multi_cut: self.multi_cut,
            max_iterations: self.max_iterations,
            backend,
            delta_zeta: self.delta_zeta,
            early_stop: self.early_stop,
            repair_samples: self.repair_samples,
            master_bnb: self.bnb(),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = ConfigLayer::from_toml("solver = \"benders-mock\"\nreads = 50\ngap_tol = 0.02\n").unwrap();
        let flags = ConfigLayer {
            reads: Some(80),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(&file), &flags).unwrap();
        assert_eq!(cfg.solver, SolverKind::BendersMock);
        assert_eq!(cfg.reads, 80);
        assert_eq!(cfg.gap_tol, 0.02);
        assert_eq!(cfg.repeats, RunConfig::default().repeats);
    }

    #[test]
    fn unknown_keys_are_reported_with_position() {
        let err = ConfigLayer::from_toml("reads = 10\nraeds = 5\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("raeds"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn bad_values_are_rejected() {
        let flags = ConfigLayer {
            reads: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(None, &flags).is_err());
        let flags = ConfigLayer {
            gap_tol: Some(-1.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(None, &flags).is_err());
    }

    #[test]
    fn solver_maps_to_backend() {
        let mut cfg = RunConfig::default();
        cfg.solver = SolverKind::BendersMock;
        assert!(matches!(cfg.benders().backend, MasterBackend::MockAnnealer { .. }));
        cfg.solver = SolverKind::BendersSa;
        assert!(matches!(cfg.benders().backend, MasterBackend::Annealing { .. }));
    }
}
