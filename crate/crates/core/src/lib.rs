//! Hybrid Benders decomposition for mixed-integer linear programs.
//!
//! The integer master problem is compiled to a QUBO and handed to an
//! annealing-style sampler, while the continuous subproblem is solved by a
//! dense revised-simplex LP solver that supplies optimal duals (optimality
//! cuts) and Farkas rays (feasibility cuts). A branch-and-bound solver serves
//! as the exact reference path, and a generator for a small multi-energy
//! system design model provides benchmark instances.
//!
//! Module map:
//!
//! * [`model`]: raw and normalized MILP representations, constraint
//!   classification, relaxation and integer fixing, problem file format.
//! * [`lp`]: revised simplex with duals and infeasibility certificates.
//! * [`mip`]: best-first branch and bound.
//! * [`qubo`]: binary encodings, master-to-QUBO compilation, QUBO files.
//! * [`sampler`]: simulated annealing, decomposed, exhaustive and mock
//!   remote-annealer samplers.
//! * [`benders`]: the decomposition loop, cuts and master backends.
//! * [`mes`]: multi-energy system instance generator.

pub mod benders;
pub mod lp;
pub mod mes;
pub mod mip;
pub mod model;
pub mod qubo;
pub mod sampler;

pub use benders::{BendersConfig, BendersOutcome, BendersSolver, BendersStatus, MasterBackend};
pub use lp::{solve_lp, LpOutcome, LpProblem, LpTolerances};
pub use mip::{branch_and_bound, BranchAndBoundConfig, MipOutcome, MipStatus};
pub use model::{MilpModel, Sense, StandardMilp, VarKind};
pub use qubo::Qubo;
pub use sampler::{SampleSet, SamplerParams};
