//! Benchmark harness around the `qbenders` solvers: configuration
//! layering, run reports and logs, solver comparisons and the best-case
//! runtime extrapolation for mock-annealer runs.

pub mod compare;
pub mod config;
pub mod extrapolate;
pub mod instance;
pub mod report;
pub mod run;

pub use compare::{compare, Comparison};
pub use config::{ConfigLayer, RunConfig, SolverKind};
pub use extrapolate::{extrapolate, Extrapolation};
pub use instance::{Instance, InstanceSource};
pub use report::RunReport;
pub use run::{run, RunOutput};
