//! MILP representations.
//!
//! A [`MilpModel`] is what users write: mixed-sense rows, general bounds,
//! variables in any order. [`normalize`] maps it to a [`StandardMilp`]
//!
//! ```text
//! min c·x + d·y   s.t.   A x + B y >= b,   x >= 0,   0 <= y <= u,  y integer
//! ```
//!
//! which is the form every solver in this crate works on.

mod io;
mod random;
mod sparse;

pub use io::{load_model, parse_model, save_model, write_model, MODEL_FORMAT, MODEL_VERSION};
pub use random::random_milp;
pub use sparse::SparseMatrix;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpProblem, LpRow};
use crate::qubo::encoding::bits_for_integer;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("integer variable '{0}' has no finite upper bound")]
    UnboundedInteger(String),
    #[error("variable '{0}' has no finite lower bound")]
    UnboundedBelow(String),
    #[error("integer variable '{name}' has an empty domain [{lower}, {upper}]")]
    EmptyIntegerDomain { name: String, lower: f64, upper: f64 },
    #[error("constraint '{constraint}' references variable {index}, but the model has {count} variables")]
    VariableOutOfRange {
        constraint: String,
        index: usize,
        count: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    /// `None` means +infinity.
    pub upper: Option<f64>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
    /// Sparse coefficients as `(variable index, value)`.
    pub coeffs: Vec<(usize, f64)>,
}

/// A user-level MILP: minimize `Σ cost·v` subject to mixed-sense rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: Option<f64>,
        cost: f64,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
            cost,
        });
        self.variables.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.add_var(name, VarKind::Continuous, 0.0, None, cost)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.add_var(name, VarKind::Integer, 0.0, Some(1.0), cost)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            sense,
            rhs,
            coeffs,
        });
        self.constraints.len() - 1
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| v.cost * x)
            .sum()
    }

    /// Largest violation of any bound, row or integrality requirement.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x);
            if let Some(u) = v.upper {
                worst = worst.max(x - u);
            }
            if v.kind == VarKind::Integer {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let viol = match c.sense {
                Sense::Ge => c.rhs - lhs,
                Sense::Le => lhs - c.rhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        values.len() == self.variables.len() && self.max_violation(values) <= tol
    }
}

/// Where a raw variable lives in the standard form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarSlot {
    Continuous(usize),
    Integer(usize),
}

/// Reversible record of the variable split and lower-bound shift.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftRecord {
    pub slots: Vec<VarSlot>,
    pub lower: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelNames {
    pub continuous: Vec<String>,
    pub integer: Vec<String>,
    pub rows: Vec<String>,
}

/// `min c·x + d·y + offset` s.t. `A x + B y >= b`, `x >= 0`, `0 <= y <= int_upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardMilp {
    pub n_cont: usize,
    pub n_int: usize,
    pub c: Vec<f64>,
    pub d_cost: Vec<f64>,
    pub a: SparseMatrix,
    pub b_mat: SparseMatrix,
    pub b: Vec<f64>,
    pub int_upper: Vec<i64>,
    /// Constant picked up by shifting lower bounds to zero.
    pub objective_offset: f64,
    pub names: ModelNames,
    pub shift: ShiftRecord,
}

impl StandardMilp {
    /// Builds a standard-form problem directly; `a` is rows × n_cont and
    /// `b_mat` rows × n_int.
    pub fn from_parts(
        c: Vec<f64>,
        d_cost: Vec<f64>,
        a: SparseMatrix,
        b_mat: SparseMatrix,
        b: Vec<f64>,
        int_upper: Vec<i64>,
    ) -> Result<Self, ModelError> {
        let n_cont = c.len();
        let n_int = d_cost.len();
        if a.n_rows() != b.len() || b_mat.n_rows() != b.len() {
            return Err(ModelError::Dimension(format!(
                "A has {} rows, B has {} rows, b has {} entries",
                a.n_rows(),
                b_mat.n_rows(),
                b.len()
            )));
        }
        if a.n_cols() != n_cont || b_mat.n_cols() != n_int || int_upper.len() != n_int {
            return Err(ModelError::Dimension(
                "column counts do not match cost vectors".into(),
            ));
        }
        if let Some(j) = int_upper.iter().position(|&u| u < 0) {
            return Err(ModelError::EmptyIntegerDomain {
                name: format!("y{j}"),
                lower: 0.0,
                upper: int_upper[j] as f64,
            });
        }
        let mut slots: Vec<VarSlot> = (0..n_cont).map(VarSlot::Continuous).collect();
        slots.extend((0..n_int).map(VarSlot::Integer));
        let rows = b.len();
        Ok(Self {
            n_cont,
            n_int,
            c,
            d_cost,
            a,
            b_mat,
            b,
            int_upper,
            objective_offset: 0.0,
            names: ModelNames {
                continuous: (0..n_cont).map(|j| format!("x{j}")).collect(),
                integer: (0..n_int).map(|j| format!("y{j}")).collect(),
                rows: (0..rows).map(|i| format!("r{i}")).collect(),
            },
            shift: ShiftRecord {
                lower: vec![0.0; n_cont + n_int],
                slots,
            },
        })
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    /// `c·x + d·y + offset`.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.c, x) + dot(&self.d_cost, y) + self.objective_offset
    }

    /// Row activities `A x + B y`.
    pub fn activities(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        let by = self.b_mat.mul_vec(y);
        ax.iter().zip(&by).map(|(p, q)| p + q).collect()
    }

    /// Largest violation of rows, bounds and integrality.
    pub fn max_violation(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (lhs, rhs) in self.activities(x, y).iter().zip(&self.b) {
            worst = worst.max(rhs - lhs);
        }
        for &v in x {
            worst = worst.max(-v);
        }
        for (&v, &u) in y.iter().zip(&self.int_upper) {
            worst = worst.max(-v).max(v - u as f64).max((v - v.round()).abs());
        }
        worst
    }

    /// Maps a standard-form point back to raw variable values.
    pub fn denormalize(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.shift
            .slots
            .iter()
            .zip(&self.shift.lower)
            .map(|(slot, lo)| match *slot {
                VarSlot::Continuous(j) => lo + x[j],
                VarSlot::Integer(j) => lo + y[j],
            })
            .collect()
    }

    /// Maps raw variable values into the standard form.
    pub fn map_point(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; self.n_cont];
        let mut y = vec![0.0; self.n_int];
        for ((slot, lo), v) in self.shift.slots.iter().zip(&self.shift.lower).zip(values) {
            match *slot {
                VarSlot::Continuous(j) => x[j] = v - lo,
                VarSlot::Integer(j) => y[j] = v - lo,
            }
        }
        (x, y)
    }

    /// `b − B·y` over all rows.
    pub fn residual_rhs(&self, y: &[f64]) -> Vec<f64> {
        let by = self.b_mat.mul_vec(y);
        self.b.iter().zip(&by).map(|(b, q)| b - q).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Normalizes a raw model into `A x + B y >= b` with zero lower bounds.
///
/// `<=` rows are negated, `=` rows become a pair of opposing `>=` rows,
/// finite continuous upper bounds become `-x >= -(u - l)` rows and every
/// variable is shifted so its lower bound is zero.
pub fn normalize(raw: &MilpModel) -> Result<StandardMilp, ModelError> {
    let mut slots = Vec::with_capacity(raw.variables.len());
    let mut lower = Vec::with_capacity(raw.variables.len());
    let mut names = ModelNames::default();
    let mut c = Vec::new();
    let mut d_cost = Vec::new();
    let mut int_upper = Vec::new();
    let mut cont_upper: Vec<(usize, f64, String)> = Vec::new();
    let mut offset = 0.0;

    for v in &raw.variables {
        if !v.lower.is_finite() {
            return Err(ModelError::UnboundedBelow(v.name.clone()));
        }
        if !v.cost.is_finite() {
            return Err(ModelError::NonFinite(format!("cost of '{}'", v.name)));
        }
        match v.kind {
            VarKind::Continuous => {
                let j = c.len();
                c.push(v.cost);
                if let Some(u) = v.upper {
                    if !u.is_finite() {
                        return Err(ModelError::NonFinite(format!("upper bound of '{}'", v.name)));
                    }
                    cont_upper.push((j, u - v.lower, v.name.clone()));
                }
                slots.push(VarSlot::Continuous(j));
                lower.push(v.lower);
                names.continuous.push(v.name.clone());
            }
            VarKind::Integer => {
                let u = match v.upper {
                    Some(u) if u.is_finite() => u,
                    _ => return Err(ModelError::UnboundedInteger(v.name.clone())),
                };
                let lo = v.lower.ceil();
                let hi = u.floor();
                if hi < lo {
                    return Err(ModelError::EmptyIntegerDomain {
                        name: v.name.clone(),
                        lower: v.lower,
                        upper: u,
                    });
                }
                let j = d_cost.len();
                d_cost.push(v.cost);
                int_upper.push((hi - lo) as i64);
                slots.push(VarSlot::Integer(j));
                lower.push(lo);
                names.integer.push(v.name.clone());
            }
        }
        offset += v.cost * lower[lower.len() - 1];
    }

    let n_cont = c.len();
    let n_int = d_cost.len();
    let mut a_trip = Vec::new();
    let mut b_trip = Vec::new();
    let mut rhs = Vec::new();

    let mut push_row = |coeffs: &[(usize, f64)], sign: f64, r: f64, name: String, rhs: &mut Vec<f64>, names: &mut ModelNames| {
        let row = rhs.len();
        for &(k, val) in coeffs {
            match slots[k] {
                VarSlot::Continuous(j) => a_trip.push((row, j, sign * val)),
                VarSlot::Integer(j) => b_trip.push((row, j, sign * val)),
            }
        }
        rhs.push(sign * r);
        names.rows.push(name);
    };

    for con in &raw.constraints {
        if !con.rhs.is_finite() {
            return Err(ModelError::NonFinite(format!("rhs of '{}'", con.name)));
        }
        for &(k, val) in &con.coeffs {
            if k >= raw.variables.len() {
                return Err(ModelError::VariableOutOfRange {
                    constraint: con.name.clone(),
                    index: k,
                    count: raw.variables.len(),
                });
            }
            if !val.is_finite() {
                return Err(ModelError::NonFinite(format!("coefficient in '{}'", con.name)));
            }
        }
        // Shift: a·(l + v') ⋛ r  ⇔  a·v' ⋛ r − a·l
        let shifted: f64 = con.rhs - con.coeffs.iter().map(|&(k, a)| a * lower[k]).sum::<f64>();
        match con.sense {
            Sense::Ge => push_row(&con.coeffs, 1.0, shifted, con.name.clone(), &mut rhs, &mut names),
            Sense::Le => push_row(&con.coeffs, -1.0, shifted, con.name.clone(), &mut rhs, &mut names),
            Sense::Eq => {
                push_row(&con.coeffs, 1.0, shifted, format!("{}[ge]", con.name), &mut rhs, &mut names);
                push_row(&con.coeffs, -1.0, shifted, format!("{}[le]", con.name), &mut rhs, &mut names);
            }
        }
    }
    for (j, width, name) in cont_upper {
        let row = rhs.len();
        a_trip.push((row, j, -1.0));
        rhs.push(-width);
        names.rows.push(format!("ub({name})"));
    }

    let rows = rhs.len();
    Ok(StandardMilp {
        n_cont,
        n_int,
        c,
        d_cost,
        a: SparseMatrix::from_triplets(rows, n_cont, a_trip),
        b_mat: SparseMatrix::from_triplets(rows, n_int, b_trip),
        b: rhs,
        int_upper,
        objective_offset: offset,
        names,
        shift: ShiftRecord { slots, lower },
    })
}

/// Row class with respect to the continuous/integer split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintClass {
    /// Zero `A` row, nonzero `B` row; routed to the master.
    PureInteger,
    Mixed,
    /// Nonzero `A` row and zero `B` row. Rows with no coefficients at all
    /// are put here as well, so the subproblem sees them.
    PureContinuous,
}

pub fn classify_constraints(m: &StandardMilp) -> Vec<ConstraintClass> {
    (0..m.n_rows())
        .map(|i| {
            let has_cont = !m.a.row(i).is_empty();
            let has_int = !m.b_mat.row(i).is_empty();
            match (has_cont, has_int) {
                (false, true) => ConstraintClass::PureInteger,
                (true, true) => ConstraintClass::Mixed,
                _ => ConstraintClass::PureContinuous,
            }
        })
        .collect()
}

/// LP relaxation over `[x, y]` with `0 <= y <= int_upper`.
pub fn lp_relaxation(m: &StandardMilp) -> LpProblem {
    let mut costs = m.c.clone();
    costs.extend_from_slice(&m.d_cost);
    let rows = (0..m.n_rows())
        .map(|i| {
            let mut coeffs: Vec<(usize, f64)> = m.a.row(i).iter().map(|&(_, j, v)| (j, v)).collect();
            coeffs.extend(m.b_mat.row(i).iter().map(|&(_, j, v)| (m.n_cont + j, v)));
            LpRow {
                coeffs,
                sense: Sense::Ge,
                rhs: m.b[i],
            }
        })
        .collect();
    let mut upper = vec![f64::INFINITY; m.n_cont];
    upper.extend(m.int_upper.iter().map(|&u| u as f64));
    LpProblem {
        costs,
        rows,
        lower: vec![0.0; m.n_cont + m.n_int],
        upper,
        offset: m.objective_offset,
    }
}

/// Continuous LP obtained by fixing the integer variables.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedLp {
    pub lp: LpProblem,
    /// `d·ȳ + offset`, to be added to the LP objective for reporting.
    pub constant: f64,
    /// Original row index of each LP row.
    pub rows: Vec<usize>,
}

/// Subproblem `min c·x  s.t.  A x >= b − B ȳ, x >= 0` over all rows.
pub fn fix_integers(m: &StandardMilp, y_bar: &[f64]) -> Result<FixedLp, ModelError> {
    let rows: Vec<usize> = (0..m.n_rows()).collect();
    fix_integers_on_rows(m, &rows, y_bar)
}

/// Like [`fix_integers`] but restricted to a subset of rows.
pub fn fix_integers_on_rows(m: &StandardMilp, rows: &[usize], y_bar: &[f64]) -> Result<FixedLp, ModelError> {
    if y_bar.len() != m.n_int {
        return Err(ModelError::Dimension(format!(
            "expected {} integer values, got {}",
            m.n_int,
            y_bar.len()
        )));
    }
    let lp_rows = rows
        .iter()
        .map(|&i| {
            let by: f64 = m.b_mat.row(i).iter().map(|&(_, j, v)| v * y_bar[j]).sum();
            LpRow {
                coeffs: m.a.row(i).iter().map(|&(_, j, v)| (j, v)).collect(),
                sense: Sense::Ge,
                rhs: m.b[i] - by,
            }
        })
        .collect();
    Ok(FixedLp {
        lp: LpProblem {
            costs: m.c.clone(),
            rows: lp_rows,
            lower: vec![0.0; m.n_cont],
            upper: vec![f64::INFINITY; m.n_cont],
            offset: 0.0,
        },
        constant: dot(&m.d_cost, y_bar) + m.objective_offset,
        rows: rows.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub constraints: usize,
    pub variables: usize,
    pub continuous: usize,
    /// Binary variables after encoding every integer variable in base 2.
    pub binary_after_encoding: usize,
    pub pure_integer_rows: usize,
}

pub fn model_stats(m: &StandardMilp) -> ModelStats {
    let classes = classify_constraints(m);
    ModelStats {
        constraints: m.n_rows(),
        variables: m.n_cont + m.n_int,
        continuous: m.n_cont,
        binary_after_encoding: m.int_upper.iter().map(|&u| bits_for_integer(u)).sum(),
        pure_integer_rows: classes
            .iter()
            .filter(|c| **c == ConstraintClass::PureInteger)
            .count(),
    }
}
