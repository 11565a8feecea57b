//! Benders decomposition with exact or sampler-based master backends.
//!
//! Pure-integer rows stay in the master, every other row goes to the LP
//! subproblem `min c·x s.t. A x >= b − B ȳ`. The root LP relaxation gives
//! the static lower bound and a first optimality cut; afterwards each
//! iteration asks the backend for up to `multi_cut` candidate integer
//! points, evaluates their subproblems and appends one cut per candidate.
//!
//! Sampler backends cannot certify lower bounds, so the gap is measured
//! against the static bound only. The exact backend also reports the
//! master optimum, which is a valid bound and is used when larger.

pub mod master;

use std::collections::HashMap;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use master::{
    feasibility_cut, optimality_cut, Cut, CutKind, CutOrigin, CutSource, MasterProblem, MasterRow, RowOrigin,
};

use crate::lp::{dual_objective, solve_lp, FarkasRay, LpError, LpOutcome, LpProblem, LpSolution, LpTolerances};
use crate::mip::{branch_and_bound_excluding, BranchAndBoundConfig, MipStatus};
use crate::model::{classify_constraints, dot, fix_integers_on_rows, lp_relaxation, ConstraintClass, StandardMilp};
use crate::qubo::{compile_master, escalate_penalties, extract_solution, CompiledMaster, PenaltyPolicy, QuboError};
use crate::sampler::{
    sample_decomposed, sample_exact, sample_mock_annealer, sample_sa, MockDevice, SampleSet, SamplerError,
    SamplerInfo, SamplerParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MasterBackend {
    /// Branch and bound on the master MILP.
    BranchAndBound,
    Annealing { params: SamplerParams },
    Decomposed { params: SamplerParams },
    MockAnnealer { params: SamplerParams, device: MockDevice },
    /// Exhaustive QUBO enumeration (small masters only).
    Exhaustive,
}

impl MasterBackend {
    pub fn is_sampler(&self) -> bool {
        !matches!(self, MasterBackend::BranchAndBound)
    }

    fn params(&self) -> Option<&SamplerParams> {
        match self {
            MasterBackend::Annealing { params }
            | MasterBackend::Decomposed { params }
            | MasterBackend::MockAnnealer { params, .. } => Some(params),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BendersConfig {
    pub gap_tol: f64,
    /// Candidates (and cuts) per iteration.
    pub multi_cut: usize,
    pub use_valid_inequalities: bool,
    pub relaxed_master_first_iteration: bool,
    pub max_iterations: usize,
    pub backend: MasterBackend,
    /// Quantization step of ζ in the QUBO.
    pub delta_zeta: f64,
    pub penalty: PenaltyPolicy,
    /// Run the gap check from inside decomposed samplers after each pass.
    pub early_stop: bool,
    /// Consecutive iterations without a new candidate before giving up.
    pub max_failed_iterations: usize,
    /// Push sampled points that break structural rows back to feasibility
    /// with a greedy descent, and polish the best few on the master
    /// objective before they are evaluated.
    pub repair_samples: bool,
    #[serde(skip)]
    pub lp: LpTolerances,
    #[serde(skip)]
    pub master_bnb: BranchAndBoundConfig,
}

impl Default for BendersConfig {
    fn default() -> Self {
        Self {
            gap_tol: 0.05,
            multi_cut: 1,
            use_valid_inequalities: true,
            relaxed_master_first_iteration: true,
            max_iterations: 100,
            backend: MasterBackend::BranchAndBound,
            delta_zeta: 0.1,
            penalty: PenaltyPolicy::default(),
            early_stop: true,
            max_failed_iterations: 3,
            repair_samples: true,
            lp: LpTolerances::default(),
            master_bnb: BranchAndBoundConfig::default(),
        }
    }
}

impl BendersConfig {
    pub fn validate(&self) -> Result<(), BendersError> {
        if !(self.gap_tol > 0.0) {
            return Err(BendersError::Config("gap_tol must be positive".into()));
        }
        if self.multi_cut == 0 {
            return Err(BendersError::Config("multi_cut must be at least 1".into()));
        }
        if !(self.delta_zeta > 0.0) {
            return Err(BendersError::Config("delta_zeta must be positive".into()));
        }
        if let Some(p) = self.backend.params() {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CutError {
    #[error("subproblem duals are not optimal: primal {primal}, dual {dual}")]
    DualityGap { primal: f64, dual: f64 },
    #[error("optimality cut value {cut} differs from subproblem value {value} at its generator")]
    NotTight { cut: f64, value: f64 },
    #[error("infeasibility certificate failed its check")]
    InvalidRay,
    #[error("feasibility cut does not cut off its generator")]
    NotViolated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendersStatus {
    OptimalWithinGap,
    IterationLimit,
    Infeasible,
    Unbounded,
    /// The backend stopped producing new candidates.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Continue,
    OptimalWithinGap,
    IterationLimit,
    Infeasible,
}

/// Relative gap `(UB − LB)/|LB|`, absolute when `LB = 0`.
pub fn benders_gap(ub: f64, lb: f64) -> f64 {
    if !ub.is_finite() || !lb.is_finite() {
        return f64::INFINITY;
    }
    let diff = (ub - lb).max(0.0);
    if lb == 0.0 {
        diff
    } else {
        diff / lb.abs()
    }
}

pub fn check_termination(ub: f64, lb: f64, iteration: usize, master_infeasible: bool, cfg: &BendersConfig) -> Termination {
    if master_infeasible && !ub.is_finite() {
        return Termination::Infeasible;
    }
    if ub.is_finite() && lb.is_finite() {
        let diff = ub - lb;
        let limit = if lb == 0.0 { cfg.gap_tol } else { cfg.gap_tol * lb.abs() };
        if diff <= limit {
            return Termination::OptimalWithinGap;
        }
    }
    if iteration >= cfg.max_iterations {
        return Termination::IterationLimit;
    }
    Termination::Continue
}

/// Rows routed to the master (pure integer) and to the subproblem.
pub fn decompose(m: &StandardMilp) -> (Vec<usize>, Vec<usize>) {
    let mut pure = Vec::new();
    let mut sub = Vec::new();
    for (i, c) in classify_constraints(m).into_iter().enumerate() {
        if c == ConstraintClass::PureInteger {
            pure.push(i);
        } else {
            sub.push(i);
        }
    }
    (pure, sub)
}

/// Master skeleton: pure-integer rows, no cuts, unbounded ζ.
pub fn master_skeleton(m: &StandardMilp, pure: &[usize]) -> MasterProblem {
    MasterProblem {
        int_upper: m.int_upper.clone(),
        d_cost: m.d_cost.clone(),
        zeta_lo: f64::NEG_INFINITY,
        zeta_hi: f64::INFINITY,
        rows: pure
            .iter()
            .map(|&i| MasterRow {
                coeffs: m.b_mat.row(i).iter().map(|&(_, j, v)| (j, v)).collect(),
                zeta: 0.0,
                rhs: m.b[i],
                origin: RowOrigin::PureInteger(i),
                exclude: None,
            })
            .collect(),
        cuts: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSeed {
    Feasible {
        lb_static: f64,
        zeta_lo: f64,
        cut: Cut,
        solution: LpSolution,
    },
    Infeasible(FarkasRay),
    Unbounded,
}

/// Root relaxation: the static lower bound, the ζ lower bound and a first
/// optimality cut from the duals of the subproblem rows.
pub fn seed_from_lp_relaxation(m: &StandardMilp, sub_rows: &[usize], tol: &LpTolerances) -> Result<LpSeed, LpError> {
    let lp = lp_relaxation(m);
    let sol = match solve_lp(&lp, tol)? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible(r) => return Ok(LpSeed::Infeasible(r)),
        LpOutcome::Unbounded { .. } => return Ok(LpSeed::Unbounded),
    };
    let lb_static = sol.objective;
    let max_dy: f64 = m
        .d_cost
        .iter()
        .zip(&m.int_upper)
        .map(|(d, &u)| (d * u as f64).max(0.0))
        .sum();
    let mut zeta_lo = lb_static - m.objective_offset - max_dy;
    if m.c.iter().all(|&c| c >= 0.0) {
        zeta_lo = zeta_lo.max(0.0);
    }
    let duals: Vec<f64> = sub_rows.iter().map(|&i| sol.duals[i].max(0.0)).collect();
    let cut = optimality_cut(
        m,
        sub_rows,
        &duals,
        CutOrigin {
            iteration: 0,
            source: CutSource::LpRelaxationSeed,
        },
    );
    Ok(LpSeed::Feasible {
        lb_static,
        zeta_lo,
        cut,
        solution: sol,
    })
}

/// Optimality cut from an optimal subproblem solution at `y_bar`, after
/// checking strong duality and tightness at `y_bar`.
pub fn make_optimality_cut(
    m: &StandardMilp,
    sub_rows: &[usize],
    sub_lp: &LpProblem,
    sol: &LpSolution,
    y_bar: &[i64],
    origin: CutOrigin,
) -> Result<Cut, CutError> {
    let scale = 1.0 + sol.objective.abs();
    let dual = dual_objective(sub_lp, sol);
    if (dual - sol.objective).abs() > 1e-6 * scale {
        return Err(CutError::DualityGap {
            primal: sol.objective,
            dual,
        });
    }
    let duals: Vec<f64> = sol.duals.iter().map(|v| v.max(0.0)).collect();
    let mut cut = optimality_cut(m, sub_rows, &duals, origin);
    let y: Vec<f64> = y_bar.iter().map(|&v| v as f64).collect();
    let at = cut.value_at(&y);
    if (at - sol.objective).abs() > 1e-6 * scale {
        return Err(CutError::NotTight {
            cut: at,
            value: sol.objective,
        });
    }
    cut.generator = Some(y_bar.to_vec());
    Ok(cut)
}

/// Feasibility cut from a Farkas ray of the subproblem at `y_bar`.
pub fn make_feasibility_cut(
    m: &StandardMilp,
    sub_rows: &[usize],
    sub_lp: &LpProblem,
    ray: &FarkasRay,
    y_bar: &[i64],
    origin: CutOrigin,
) -> Result<Cut, CutError> {
    if !ray.is_valid(sub_lp, 1e-7) {
        return Err(CutError::InvalidRay);
    }
    let u: Vec<f64> = ray.rows.iter().map(|v| v.max(0.0)).collect();
    let mut cut = feasibility_cut(m, sub_rows, &u, origin);
    let y: Vec<f64> = y_bar.iter().map(|&v| v as f64).collect();
    if cut.value_at(&y) <= 0.0 {
        return Err(CutError::NotViolated);
    }
    cut.generator = Some(y_bar.to_vec());
    Ok(cut)
}

/// Nearest integer with halves going toward zero, clamped to `[0, upper]`.
pub fn round_relaxed(v: f64, upper: i64) -> i64 {
    let f = v.floor();
    let r = if v - f > 0.5 { f + 1.0 } else { f };
    (r as i64).clamp(0, upper)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub master: f64,
    pub subproblem: f64,
    pub data_processing: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerStats {
    /// Master solves handled by a sampler.
    pub sampler_iterations: usize,
    pub calls: usize,
    pub reads: usize,
    pub repeats: usize,
    pub passes: usize,
    pub tasks: usize,
    /// Seconds of synthetic device time.
    pub device_time: f64,
    pub early_stops: usize,
    pub flip_attempts: u64,
    pub penalty_escalations: usize,
    /// Sampled points that needed the greedy repair.
    pub repaired: usize,
    pub max_qubo_bits: usize,
}

impl SamplerStats {
    fn absorb(&mut self, info: &SamplerInfo) {
        self.calls += 1;
        self.reads += info.reads;
        self.repeats += info.repeats;
        self.passes += info.passes;
        self.tasks += info.tasks;
        self.device_time += info.device_time.as_secs_f64();
        self.flip_attempts += info.flip_attempts;
        if info.early_stopped {
            self.early_stops += 1;
        }
    }
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ub: Option<f64>,
    pub lb_static: f64,
    pub lb: f64,
    pub gap: Option<f64>,
    pub candidates: usize,
    pub cuts: Vec<CutKind>,
    pub duplicate_cuts: usize,
    pub rejected_cuts: usize,
    pub relaxed_master: bool,
    pub failed: bool,
    pub early_stop: bool,
    pub qubo_bits: Option<usize>,
    pub tasks: usize,
    pub device_time: f64,
    pub master_time: f64,
    pub subproblem_time: f64,
    pub data_processing_time: f64,
}

/// Subproblem result for one integer point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub y: Vec<i64>,
    /// Subproblem optimum `c·x`, `None` when infeasible.
    pub subproblem_value: Option<f64>,
    /// Full objective when `(x, y)` is feasible for the original model.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersOutcome {
    pub status: BendersStatus,
    pub objective: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lb_static: f64,
    pub lb: f64,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub master: MasterProblem,
    pub pure_integer_rows: usize,
    pub valid_inequalities: usize,
    pub records: Vec<IterationRecord>,
    pub evaluations: Vec<Evaluation>,
    pub timings: Timings,
    pub sampler: SamplerStats,
}

impl BendersOutcome {
    pub fn cuts_of(&self, kind: CutKind) -> usize {
        self.master.cuts.iter().filter(|c| c.kind == kind).count()
    }
}

pub struct BendersSolver<'a> {
    m: &'a StandardMilp,
    cfg: BendersConfig,
    valid: Vec<MasterRow>,
    hints: Vec<Vec<i64>>,
}

impl<'a> BendersSolver<'a> {
    pub fn new(m: &'a StandardMilp, cfg: BendersConfig) -> Self {
        Self {
            m,
            cfg,
            valid: Vec::new(),
            hints: Vec::new(),
        }
    }

    /// Extra pure-integer rows implied by the model; only used when
    /// `use_valid_inequalities` is set.
    pub fn with_valid_inequalities(mut self, rows: Vec<MasterRow>) -> Self {
        self.valid = rows;
        self
    }

    /// Known feasible integer points, used only to bound ζ from above
    /// before the first incumbent exists.
    pub fn with_hints(mut self, hints: Vec<Vec<i64>>) -> Self {
        self.hints = hints;
        self
    }

    pub fn solve(self) -> Result<BendersOutcome, BendersError> {
        self.cfg.validate()?;
        let start = Instant::now();
        let (pure, sub_rows) = decompose(self.m);
        let mut master = master_skeleton(self.m, &pure);
        let n_valid = if self.cfg.use_valid_inequalities {
            master.rows.extend(self.valid.iter().cloned());
            self.valid.len()
        } else {
            0
        };
        let mut run = Run {
            m: self.m,
            cfg: &self.cfg,
            sub_rows,
            master,
            ub: f64::INFINITY,
            best_x: Vec::new(),
            best_y: Vec::new(),
            lb_static: f64::NEG_INFINITY,
            lb: f64::NEG_INFINITY,
            evaluated: HashMap::new(),
            evaluations: Vec::new(),
            tabu: Vec::new(),
            held: None,
            timings: Timings::default(),
            sampler: SamplerStats::default(),
            records: Vec::new(),
            iter: IterScratch::default(),
            hint_zeta_hi: f64::INFINITY,
            reads_scale: 1,
        };

        let t = Instant::now();
        let seed = seed_from_lp_relaxation(self.m, &run.sub_rows, &self.cfg.lp)?;
        run.timings.subproblem += t.elapsed().as_secs_f64();
        let status = match seed {
            LpSeed::Infeasible(_) => Some(BendersStatus::Infeasible),
            LpSeed::Unbounded => Some(BendersStatus::Unbounded),
            LpSeed::Feasible {
                lb_static, zeta_lo, cut, ..
            } => {
                run.lb_static = lb_static;
                run.lb = lb_static;
                run.master.zeta_lo = zeta_lo;
                run.master.cuts.push(cut);
                None
            }
        };
        let status = match status {
            Some(s) => s,
            None => {
                run.bound_zeta_from_hints(&self.hints)?;
                run.main_loop()?
            }
        };
        run.timings.total = start.elapsed().as_secs_f64();
        let gap = run.ub.is_finite().then(|| benders_gap(run.ub, run.lb));
        Ok(BendersOutcome {
            status,
            objective: run.ub.is_finite().then_some(run.ub),
            x: run.best_x,
            y: run.best_y,
            lb_static: run.lb_static,
            lb: run.lb,
            gap,
            iterations: run.records.len(),
            pure_integer_rows: pure.len(),
            valid_inequalities: n_valid,
            master: run.master,
            records: run.records,
            evaluations: run.evaluations,
            timings: run.timings,
            sampler: run.sampler,
        })
    }
}

#[derive(Default)]
struct IterScratch {
    cuts: Vec<CutKind>,
    duplicates: usize,
    rejected: usize,
    sub_time: f64,
    master_time: f64,
    early_stop: bool,
    qubo_bits: Option<usize>,
    tasks: usize,
    device_time: f64,
}

enum Eval {
    New,
    Known,
    Unbounded,
}

struct Candidates {
    ys: Vec<Vec<i64>>,
    master_lb: Option<f64>,
    master_infeasible: bool,
}

struct Run<'a> {
    m: &'a StandardMilp,
    cfg: &'a BendersConfig,
    sub_rows: Vec<usize>,
    master: MasterProblem,
    ub: f64,
    best_x: Vec<f64>,
    best_y: Vec<f64>,
    lb_static: f64,
    lb: f64,
    evaluated: HashMap<Vec<i64>, Option<f64>>,
    evaluations: Vec<Evaluation>,
    tabu: Vec<Vec<i64>>,
    timings: Timings,
    sampler: SamplerStats,
    records: Vec<IterationRecord>,
    iter: IterScratch,
    hint_zeta_hi: f64,
    reads_scale: usize,
    /// Cuts from evaluations inside the sampler stop hook, with whether the
    /// point improved the incumbent.
    held: Option<Vec<(bool, Vec<i64>, Cut)>>,
}

/// Top-ranked samples that get the objective descent.
const POLISHED: usize = 20;

fn as_f64(y: &[i64]) -> Vec<f64> {
    y.iter().map(|&v| v as f64).collect()
}

impl<'a> Run<'a> {
    fn min_dy(&self) -> f64 {
        self.m
            .d_cost
            .iter()
            .zip(&self.m.int_upper)
            .map(|(d, &u)| (d * u as f64).min(0.0))
            .sum()
    }

    /// `ζ_hi` from a full objective value known to be attainable.
    fn zeta_hi_from(&self, total: f64) -> f64 {
        total - self.m.objective_offset - self.min_dy()
    }

    fn bound_zeta_from_hints(&mut self, hints: &[Vec<i64>]) -> Result<(), BendersError> {
        for h in hints {
            let t = Instant::now();
            let fixed = fix_integers_on_rows(self.m, &self.sub_rows, &as_f64(h))
                .map_err(|e| BendersError::Config(e.to_string()))?;
            let out = solve_lp(&fixed.lp, &self.cfg.lp)?;
            self.timings.subproblem += t.elapsed().as_secs_f64();
            if let LpOutcome::Optimal(sol) = out {
                let total = sol.objective + fixed.constant;
                self.hint_zeta_hi = self.hint_zeta_hi.min(self.zeta_hi_from(total));
            }
        }
        Ok(())
    }

    fn update_zeta_hi(&mut self) {
        let lo = self.master.zeta_lo;
        let hi = if self.ub.is_finite() {
            self.zeta_hi_from(self.ub)
        } else if self.hint_zeta_hi.is_finite() {
            self.hint_zeta_hi
        } else {
            lo + 2.0 * self.lb_static.abs().max(1.0)
        };
        self.master.zeta_hi = hi.max(lo);
    }

    fn gap_closed(&self) -> bool {
        check_termination(self.ub, self.lb, 0, false, self.cfg) == Termination::OptimalWithinGap
    }

    fn feasible_tol(&self) -> f64 {
        1e-6 * self.m.b.iter().fold(1.0f64, |a, b| a.max(b.abs()))
    }

    /// Solves the subproblem at `y`, updates the incumbent and appends a cut.
    fn evaluate(&mut self, y: &[i64], iteration: usize, source: CutSource) -> Result<Eval, BendersError> {
        if self.evaluated.contains_key(y) {
            return Ok(Eval::Known);
        }
        let yf = as_f64(y);
        let fixed = fix_integers_on_rows(self.m, &self.sub_rows, &yf).map_err(|e| BendersError::Config(e.to_string()))?;
        let t = Instant::now();
        let out = solve_lp(&fixed.lp, &self.cfg.lp)?;
        let dt = t.elapsed().as_secs_f64();
        self.timings.subproblem += dt;
        self.iter.sub_time += dt;

        let origin = |s: CutSource| CutOrigin { iteration, source: s };
        let mut improved = false;
        let (cut, value, objective) = match &out {
            LpOutcome::Optimal(sol) => {
                let total = sol.objective + fixed.constant;
                let feasible = self.m.max_violation(&sol.x, &yf) <= self.feasible_tol();
                if feasible && total < self.ub {
                    improved = true;
                    self.ub = total;
                    self.best_x = sol.x.clone();
                    self.best_y = yf.clone();
                }
                let src = if source == CutSource::RelaxedMaster {
                    CutSource::RelaxedMaster
                } else {
                    CutSource::SubproblemDual
                };
                let cut = make_optimality_cut(self.m, &self.sub_rows, &fixed.lp, sol, y, origin(src));
                (cut, Some(sol.objective), feasible.then_some(total))
            }
            LpOutcome::Infeasible(ray) => {
                let src = if source == CutSource::RelaxedMaster {
                    CutSource::RelaxedMaster
                } else {
                    CutSource::SubproblemRay
                };
                let cut = make_feasibility_cut(self.m, &self.sub_rows, &fixed.lp, ray, y, origin(src));
                (cut, None, None)
            }
            LpOutcome::Unbounded { .. } => return Ok(Eval::Unbounded),
        };
        self.evaluated.insert(y.to_vec(), value);
        self.evaluations.push(Evaluation {
            iteration,
            y: y.to_vec(),
            subproblem_value: value,
            objective,
        });
        match cut {
            Ok(cut) if self.held.is_some() => {
                self.held.as_mut().unwrap().push((improved, y.to_vec(), cut));
            }
            Ok(cut) => {
                if self.master.cuts.iter().any(|c| c.same_as(&cut, 1e-9)) {
                    self.iter.duplicates += 1;
                    self.tabu.push(y.to_vec());
                } else {
                    self.iter.cuts.push(cut.kind);
                    self.master.cuts.push(cut);
                }
            }
            Err(e) => {
                warn!("iteration {iteration}: cut rejected at {y:?}: {e}");
                self.iter.rejected += 1;
                self.tabu.push(y.to_vec());
            }
        }
        Ok(Eval::New)
    }

    fn relaxed_candidate(&mut self) -> Result<Candidates, BendersError> {
        let t = Instant::now();
        let milp = self.master.to_milp();
        let out = solve_lp(&lp_relaxation(&milp), &self.cfg.lp)?;
        self.iter.master_time += t.elapsed().as_secs_f64();
        Ok(match out {
            LpOutcome::Optimal(sol) => {
                let y = sol.x[1..]
                    .iter()
                    .zip(&self.master.int_upper)
                    .map(|(&v, &u)| round_relaxed(v, u))
                    .collect();
                Candidates {
                    ys: vec![y],
                    master_lb: None,
                    master_infeasible: false,
                }
            }
            _ => Candidates {
                ys: Vec::new(),
                master_lb: None,
                master_infeasible: true,
            },
        })
    }

    fn exact_candidates(&mut self) -> Result<Candidates, BendersError> {
        let t = Instant::now();
        let milp = self.master.to_milp();
        let mut forbidden = self.tabu.clone();
        let mut out = Candidates {
            ys: Vec::new(),
            master_lb: None,
            master_infeasible: false,
        };
        for k in 0..self.cfg.multi_cut {
            let res = branch_and_bound_excluding(&milp, &self.cfg.master_bnb, &forbidden)?;
            if k == 0 && self.tabu.is_empty() {
                match res.status {
                    MipStatus::Infeasible => out.master_infeasible = true,
                    _ if res.bound.is_finite() => out.master_lb = Some(res.bound + self.m.objective_offset),
                    _ => {}
                }
            }
            if !res.has_incumbent() {
                break;
            }
            let y: Vec<i64> = res.y.iter().map(|v| v.round() as i64).collect();
            forbidden.push(y.clone());
            out.ys.push(y);
        }
        self.iter.master_time += t.elapsed().as_secs_f64();
        Ok(out)
    }

    fn sampler_params(&self, iteration: usize, attempt: u32) -> SamplerParams {
        let mut p = self.cfg.backend.params().cloned().unwrap_or_default();
        p.reads *= self.reads_scale;
        p.seed = p
            .seed
            .wrapping_add(1_000_003u64.wrapping_mul(iteration as u64))
            .wrapping_add(attempt as u64);
        p
    }

    /// Runs the configured sampler; the stop hook evaluates the current
    /// assignment and reports whether the gap has closed.
    /// The decoded point if it satisfies the structural rows, after the
    /// greedy repair when that is enabled.
    fn master_point(&mut self, y: Vec<i64>) -> Option<Vec<i64>> {
        if self.master.is_feasible_y(&as_f64(&y), 1e-9) {
            return Some(y);
        }
        if !self.cfg.repair_samples {
            return None;
        }
        let r = self.master.repair_y(&y, 4 * y.len())?;
        self.sampler.repaired += 1;
        Some(r)
    }

    fn run_sampler(&mut self, cm: &CompiledMaster, p: &SamplerParams, iteration: usize) -> Result<SampleSet, BendersError> {
        let t = Instant::now();
        let mut hook_time = 0.0;
        let mut hook_error: Option<BendersError> = None;
        let early = self.cfg.early_stop;
        let backend = self.cfg.backend.clone();
        self.held = Some(Vec::new());
        let ss = {
            let mut stop = |bits: &[u8]| -> bool {
                if !early || hook_error.is_some() {
                    return false;
                }
                let h = Instant::now();
                if let Some(mut y) = self.master_point(cm.decode_y(bits)) {
                    if self.cfg.repair_samples {
                        y = self.master.polish_y(&y, 4 * y.len());
                    }
                    // the master value under-estimates the true one, so a
                    // point at or above the incumbent cannot close the gap
                    let yf = as_f64(&y);
                    let estimate = self.master.zeta_star(&yf) + dot(&self.master.d_cost, &yf) + self.m.objective_offset;
                    if estimate >= self.ub {
                        hook_time += h.elapsed().as_secs_f64();
                        return false;
                    }
                    if let Err(e) = self.evaluate(&y, iteration, CutSource::SubproblemDual) {
                        hook_error = Some(e);
                    }
                }
                let closed = self.gap_closed();
                hook_time += h.elapsed().as_secs_f64();
                closed
            };
            match &backend {
                MasterBackend::Annealing { .. } => sample_sa(&cm.qubo, p)?,
                MasterBackend::Decomposed { .. } => {
                    let mut inner = |q: &crate::qubo::Qubo, ip: &SamplerParams| sample_sa(q, ip);
                    sample_decomposed(&cm.qubo, p, &mut inner, &mut stop)?
                }
                MasterBackend::MockAnnealer { device, .. } => sample_mock_annealer(&cm.qubo, p, device, &mut stop)?,
                MasterBackend::Exhaustive => sample_exact(&cm.qubo)?,
                MasterBackend::BranchAndBound => unreachable!("not a sampler backend"),
            }
        };
        // Only the cuts of points that improved the incumbent enter the
        // master; the rest would grow the QUBO without much benefit, so
        // those points are forgotten and may be proposed again.
        for (improved, y, cut) in self.held.take().unwrap_or_default() {
            if improved && !self.master.cuts.iter().any(|c| c.same_as(&cut, 1e-9)) {
                self.iter.cuts.push(cut.kind);
                self.master.cuts.push(cut);
            } else if !improved {
                self.evaluated.remove(&y);
            }
        }
        if let Some(e) = hook_error {
            return Err(e);
        }
        // hook time is subproblem or data-processing work, not master time
        self.iter.master_time += (t.elapsed().as_secs_f64() - hook_time).max(0.0);
        self.sampler.absorb(&ss.info);
        self.iter.tasks += ss.info.tasks;
        self.iter.device_time += ss.info.device_time.as_secs_f64();
        if ss.info.early_stopped {
            self.iter.early_stop = true;
        }
        Ok(ss)
    }

    fn sampler_candidates(&mut self, iteration: usize) -> Result<Candidates, BendersError> {
        self.update_zeta_hi();
        let mut cm = compile_master(&self.master, &self.cfg.penalty, self.cfg.delta_zeta)?;
        self.sampler.sampler_iterations += 1;
        let mut attempt = 0u32;
        loop {
            self.iter.qubo_bits = Some(cm.n_bits());
            self.sampler.max_qubo_bits = self.sampler.max_qubo_bits.max(cm.n_bits());
            let p = self.sampler_params(iteration, attempt);
            let ss = self.run_sampler(&cm, &p, iteration)?;
            if self.iter.early_stop {
                return Ok(Candidates {
                    ys: Vec::new(),
                    master_lb: None,
                    master_infeasible: false,
                });
            }
            let mut ranked: Vec<(f64, Vec<i64>)> = Vec::new();
            for s in &ss.samples {
                let Some(y) = self.master_point(cm.decode_y(&s.bits)) else { continue };
                if ranked.iter().any(|(_, r)| *r == y) || self.tabu.contains(&y) || self.evaluated.contains_key(&y) {
                    continue;
                }
                let yf = as_f64(&y);
                let value = self.master.zeta_star(&yf) + dot(&self.master.d_cost, &yf);
                ranked.push((value, y));
            }
            if !ranked.is_empty() {
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                if self.cfg.repair_samples {
                    let mut polished: Vec<(f64, Vec<i64>)> = ranked
                        .iter()
                        .take(POLISHED.max(self.cfg.multi_cut))
                        .map(|(_, y)| {
                            let p = self.master.polish_y(y, 4 * y.len());
                            let pf = as_f64(&p);
                            (self.master.zeta_star(&pf) + dot(&self.master.d_cost, &pf), p)
                        })
                        .filter(|(_, y)| !self.tabu.contains(y) && !self.evaluated.contains_key(y))
                        .collect();
                    polished.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                    polished.dedup_by(|a, b| a.1 == b.1);
                    if !polished.is_empty() {
                        ranked = polished;
                    }
                }
                ranked.truncate(self.cfg.multi_cut);
                return Ok(Candidates {
                    ys: ranked.into_iter().map(|(_, y)| y).collect(),
                    master_lb: None,
                    master_infeasible: false,
                });
            }
            let Some(best) = ss.best() else { break };
            let sample = extract_solution(&cm, &best.bits)?;
            if sample.is_feasible() {
                break;
            }
            match escalate_penalties(&cm, &sample) {
                Ok(next) => {
                    cm = next;
                    self.sampler.penalty_escalations += 1;
                    attempt += 1;
                }
                Err(QuboError::EscalationExhausted(_)) => break,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Candidates {
            ys: Vec::new(),
            master_lb: None,
            master_infeasible: false,
        })
    }

    fn main_loop(&mut self) -> Result<BendersStatus, BendersError> {
        let mut failures = 0usize;
        let mut iteration = 0usize;
        loop {
            iteration += 1;
            let t_iter = Instant::now();
            self.iter = IterScratch::default();
            let relaxed = iteration == 1 && self.cfg.relaxed_master_first_iteration;
            let cands = if relaxed {
                self.relaxed_candidate()?
            } else if self.cfg.backend.is_sampler() {
                self.sampler_candidates(iteration)?
            } else {
                self.exact_candidates()?
            };
            self.tabu.clear();

            if let Some(lb) = cands.master_lb {
                self.lb = self.lb.max(lb);
            }
            let source = if relaxed {
                CutSource::RelaxedMaster
            } else {
                CutSource::SubproblemDual
            };
            let mut fresh = 0usize;
            let mut unbounded = false;
            for y in &cands.ys {
                if self.gap_closed() {
                    break;
                }
                match self.evaluate(y, iteration, source)? {
                    Eval::New => fresh += 1,
                    Eval::Known => {}
                    Eval::Unbounded => {
                        unbounded = true;
                        break;
                    }
                }
            }
            // With an exact master, a repeated optimum means the master bound
            // has met the incumbent.
            if !self.cfg.backend.is_sampler() && !relaxed && fresh == 0 && !cands.ys.is_empty() && self.ub.is_finite() {
                self.lb = self.lb.max(self.ub.min(cands.master_lb.unwrap_or(self.ub)));
                if benders_gap(self.ub, self.lb) > self.cfg.gap_tol {
                    self.lb = self.ub;
                }
            }
            let failed = fresh == 0 && !self.iter.early_stop && !self.gap_closed();
            if failed && self.cfg.backend.is_sampler() {
                failures += 1;
                self.reads_scale = (self.reads_scale * 2).min(4);
            } else if !failed {
                failures = 0;
            }

            let total = t_iter.elapsed().as_secs_f64();
            let dp = (total - self.iter.master_time - self.iter.sub_time).max(0.0);
            self.timings.master += self.iter.master_time;
            self.timings.data_processing += dp;
            let record = IterationRecord {
                iteration,
                ub: self.ub.is_finite().then_some(self.ub),
                lb_static: self.lb_static,
                lb: self.lb,
                gap: self.ub.is_finite().then(|| benders_gap(self.ub, self.lb)),
                candidates: cands.ys.len(),
                cuts: std::mem::take(&mut self.iter.cuts),
                duplicate_cuts: self.iter.duplicates,
                rejected_cuts: self.iter.rejected,
                relaxed_master: relaxed,
                failed,
                early_stop: self.iter.early_stop,
                qubo_bits: self.iter.qubo_bits,
                tasks: self.iter.tasks,
                device_time: self.iter.device_time,
                master_time: self.iter.master_time,
                subproblem_time: self.iter.sub_time,
                data_processing_time: dp,
            };
            debug!(
                "iteration {} ub {:?} lb {} gap {:?} cuts {:?} bits {:?} tasks {} master {:.2}s",
                record.iteration, record.ub, record.lb, record.gap, record.cuts, record.qubo_bits, record.tasks, record.master_time
            );
            self.records.push(record);

            if unbounded {
                return Ok(BendersStatus::Unbounded);
            }
            let master_infeasible = cands.master_infeasible && !relaxed || (relaxed && cands.master_infeasible);
            match check_termination(self.ub, self.lb, iteration, master_infeasible, self.cfg) {
                Termination::OptimalWithinGap => return Ok(BendersStatus::OptimalWithinGap),
                Termination::Infeasible => return Ok(BendersStatus::Infeasible),
                Termination::IterationLimit => return Ok(BendersStatus::IterationLimit),
                Termination::Continue => {}
            }
            if master_infeasible {
                // cuts exclude every remaining point; the incumbent is optimal
                self.lb = self.lb.max(self.ub);
                return Ok(BendersStatus::OptimalWithinGap);
            }
            if failures >= self.cfg.max_failed_iterations
                || (!self.cfg.backend.is_sampler() && cands.ys.is_empty() && !relaxed)
            {
                return Ok(BendersStatus::Stalled);
            }
        }
    }
}
