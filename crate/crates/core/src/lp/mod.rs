//! Dense revised-simplex LP solver.
//!
//! Solves `min c·x + offset` subject to rows of sense `>=`, `<=` or `=`,
//! and `lower <= x <= upper` with finite lower bounds. Optimal outcomes carry
//! row duals; infeasible outcomes carry a Farkas certificate taken from the
//! phase-1 duals; unbounded outcomes carry an improving ray.
//!
//! Sign convention for row multipliers (duals and rays alike): `>= 0` on
//! `>=` rows, `<= 0` on `<=` rows, free on `=` rows. Upper bounds act as
//! extra `x_j <= u_j` rows whose multipliers are reported separately and
//! are `<= 0`.

mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Sense;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub costs: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    /// `f64::INFINITY` for no upper bound.
    pub upper: Vec<f64>,
    pub offset: f64,
}

impl LpProblem {
    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.costs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs = row.activity(x);
            worst = worst.max(match row.sense {
                Sense::Ge => row.rhs - lhs,
                Sense::Le => lhs - row.rhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            });
        }
        for j in 0..self.n_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpTolerances {
    pub feasibility: f64,
    pub optimality: f64,
    /// Smallest pivot element accepted by the ratio test.
    pub pivot: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_stall: usize,
    /// Pivots between basis refactorizations.
    pub refactor_every: usize,
    pub max_iterations: usize,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            optimality: 1e-7,
            pivot: 1e-9,
            degeneracy_stall: 100,
            refactor_every: 50,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row.
    pub duals: Vec<f64>,
    /// Multipliers of the `x_j <= u_j` bounds (zero where unbounded).
    pub bound_duals: Vec<f64>,
    pub iterations: usize,
}

/// Certificate that no `x` satisfies the rows and bounds.
///
/// With `y = rows`, `w = bounds`: `Σ_i y_i a_ij + w_j <= 0` for every
/// column and `Σ_i y_i (rhs_i − a_i·l) + Σ_j w_j (u_j − l_j) > 0`. For a
/// pure `A x >= rhs, x >= 0` system this is `y >= 0, Aᵀy <= 0, y·rhs > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasRay {
    pub rows: Vec<f64>,
    pub bounds: Vec<f64>,
}

impl FarkasRay {
    /// `(max column sum, certificate value)`; valid when the first is
    /// `<= tol` and the second `> tol`.
    pub fn check(&self, lp: &LpProblem) -> (f64, f64) {
        let n = lp.n_vars();
        let mut col = self.bounds.clone();
        col.resize(n, 0.0);
        let mut value = 0.0;
        for (row, &y) in lp.rows.iter().zip(&self.rows) {
            let mut shifted = row.rhs;
            for &(j, a) in &row.coeffs {
                col[j] += y * a;
                shifted -= a * lp.lower[j];
            }
            value += y * shifted;
        }
        for j in 0..n {
            let w = self.bounds.get(j).copied().unwrap_or(0.0);
            if w != 0.0 {
                value += w * (lp.upper[j] - lp.lower[j]);
            }
        }
        let worst = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (worst.max(0.0), value)
    }

    pub fn signs_ok(&self, lp: &LpProblem, tol: f64) -> bool {
        lp.rows.iter().zip(&self.rows).all(|(row, &y)| match row.sense {
            Sense::Ge => y >= -tol,
            Sense::Le => y <= tol,
            Sense::Eq => true,
        }) && self.bounds.iter().all(|&w| w <= tol)
    }

    pub fn is_valid(&self, lp: &LpProblem, tol: f64) -> bool {
        let (worst, value) = self.check(lp);
        self.signs_ok(lp, tol) && worst <= tol && value > tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasRay),
    /// Feasible with an improving direction `d`: `c·d < 0`, rows and bounds
    /// stay satisfied along `x + t d` for `t >= 0`.
    Unbounded { x: Vec<f64>, direction: Vec<f64> },
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn status_name(&self) -> &'static str {
        match self {
            LpOutcome::Optimal(_) => "optimal",
            LpOutcome::Infeasible(_) => "infeasible",
            LpOutcome::Unbounded { .. } => "unbounded",
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LpError {
    #[error("singular basis after refactorization: {0}")]
    NumericalFailure(String),
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("invalid LP: {0}")]
    InvalidInput(String),
}

/// Solves an LP with the two-phase revised simplex method.
pub fn solve_lp(lp: &LpProblem, tol: &LpTolerances) -> Result<LpOutcome, LpError> {
    simplex::solve(lp, tol)
}

/// `max_j (aᵀy − c)_j` over columns, accounting for bound multipliers; the
/// dual-feasibility residual of an optimal solution.
pub fn dual_residual(lp: &LpProblem, sol: &LpSolution) -> f64 {
    let mut col = sol.bound_duals.clone();
    for (row, &y) in lp.rows.iter().zip(&sol.duals) {
        for &(j, a) in &row.coeffs {
            col[j] += y * a;
        }
    }
    // Columns sitting above their lower bound need equality; columns at
    // the lower bound only need `<=`.
    let mut worst: f64 = 0.0;
    for j in 0..lp.n_vars() {
        let excess = col[j] - lp.costs[j];
        worst = worst.max(excess);
        if sol.x[j] > lp.lower[j] + 1e-9 {
            worst = worst.max(-excess);
        }
    }
    worst
}

/// Dual objective `Σ y_i (rhs_i − a_i·l) + Σ w_j (u_j − l_j) + c·l + offset`.
pub fn dual_objective(lp: &LpProblem, sol: &LpSolution) -> f64 {
    let mut value = lp.offset;
    for j in 0..lp.n_vars() {
        value += lp.costs[j] * lp.lower[j];
        if sol.bound_duals[j] != 0.0 {
            value += sol.bound_duals[j] * (lp.upper[j] - lp.lower[j]);
        }
    }
    for (row, &y) in lp.rows.iter().zip(&sol.duals) {
        let shifted = row.rhs - row.coeffs.iter().map(|&(j, a)| a * lp.lower[j]).sum::<f64>();
        value += y * shifted;
    }
    value
}

#[cfg(test)]
mod tests;
