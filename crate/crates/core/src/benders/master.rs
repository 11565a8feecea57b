//! Master problem rows and Benders cuts.

use serde::{Deserialize, Serialize};

use crate::model::{dot, SparseMatrix, StandardMilp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Optimality,
    Feasibility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSource {
    SubproblemDual,
    SubproblemRay,
    LpRelaxationSeed,
    RelaxedMaster,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutOrigin {
    pub iteration: usize,
    pub source: CutSource,
}

/// `coeff_zeta · ζ >= rhs + coeff_y · y`.
///
/// An optimality cut has `coeff_zeta = 1`, `rhs = b·v`, `coeff_y = −Bᵀv`;
/// a feasibility cut has `coeff_zeta = 0` and the same layout built from a
/// ray `u`, so it reads `0 >= (b − B y)·u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub coeff_y: Vec<f64>,
    pub coeff_zeta: f64,
    pub rhs: f64,
    pub origin: CutOrigin,
    /// Integer point whose subproblem produced the cut.
    pub generator: Option<Vec<i64>>,
}

impl Cut {
    /// Right-hand side `rhs + coeff_y·y`; for an optimality cut this is the
    /// lower estimate of the subproblem value at `y`.
    pub fn value_at(&self, y: &[f64]) -> f64 {
        self.rhs + dot(&self.coeff_y, y)
    }

    pub fn violation(&self, y: &[f64], zeta: f64) -> f64 {
        (self.value_at(y) - self.coeff_zeta * zeta).max(0.0)
    }

    /// Coefficient-wise equality within `tol`.
    pub fn same_as(&self, other: &Cut, tol: f64) -> bool {
        self.kind == other.kind
            && (self.rhs - other.rhs).abs() <= tol
            && self
                .coeff_y
                .iter()
                .zip(&other.coeff_y)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn as_row(&self, index: usize) -> MasterRow {
        MasterRow {
            coeffs: self
                .coeff_y
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, -v))
                .collect(),
            zeta: self.coeff_zeta,
            rhs: self.rhs,
            origin: RowOrigin::Cut(index),
            exclude: match self.kind {
                CutKind::Feasibility => self.generator.clone(),
                CutKind::Optimality => None,
            },
        }
    }
}

/// Builds `ζ >= Σ_i v_i (b_i − B_i y)` over the listed rows.
pub fn optimality_cut(m: &StandardMilp, rows: &[usize], duals: &[f64], origin: CutOrigin) -> Cut {
    let (rhs, coeff_y) = aggregate(m, rows, duals);
    Cut {
        kind: CutKind::Optimality,
        coeff_y,
        coeff_zeta: 1.0,
        rhs,
        origin,
        generator: None,
    }
}

/// Builds `0 >= Σ_i u_i (b_i − B_i y)` over the listed rows.
pub fn feasibility_cut(m: &StandardMilp, rows: &[usize], ray: &[f64], origin: CutOrigin) -> Cut {
    let (rhs, coeff_y) = aggregate(m, rows, ray);
    Cut {
        kind: CutKind::Feasibility,
        coeff_y,
        coeff_zeta: 0.0,
        rhs,
        origin,
        generator: None,
    }
}

fn aggregate(m: &StandardMilp, rows: &[usize], weights: &[f64]) -> (f64, Vec<f64>) {
    let mut rhs = 0.0;
    let mut coeff_y = vec![0.0; m.n_int];
    for (&i, &w) in rows.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        rhs += w * m.b[i];
        for &(_, j, v) in m.b_mat.row(i) {
            coeff_y[j] -= w * v;
        }
    }
    (rhs, coeff_y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    /// Pure-integer row of the original model.
    PureInteger(usize),
    ValidInequality(usize),
    Cut(usize),
    /// `y_j <= U_j` where the binary encoding reaches past `U_j`.
    IntegerBound(usize),
}

/// `zeta · ζ + Σ coeffs·y >= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterRow {
    pub coeffs: Vec<(usize, f64)>,
    pub zeta: f64,
    pub rhs: f64,
    pub origin: RowOrigin,
    /// A point the row is known to cut off; quantized versions of the row
    /// must keep excluding it.
    pub exclude: Option<Vec<i64>>,
}

impl MasterRow {
    pub fn activity(&self, y: &[f64], zeta: f64) -> f64 {
        self.zeta * zeta + self.coeffs.iter().map(|&(j, a)| a * y[j]).sum::<f64>()
    }

    pub fn is_satisfied(&self, y: &[f64], zeta: f64, tol: f64) -> bool {
        self.activity(y, zeta) >= self.rhs - tol * (1.0 + self.rhs.abs())
    }
}

/// `min ζ + d·y` over the pure-integer rows, valid inequalities and cuts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterProblem {
    pub int_upper: Vec<i64>,
    pub d_cost: Vec<f64>,
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub rows: Vec<MasterRow>,
    pub cuts: Vec<Cut>,
}

impl MasterProblem {
    pub fn n_int(&self) -> usize {
        self.int_upper.len()
    }

    /// Structural rows followed by one row per cut.
    pub fn all_rows(&self) -> Vec<MasterRow> {
        let mut rows = self.rows.clone();
        rows.extend(self.cuts.iter().enumerate().map(|(k, c)| c.as_row(k)));
        rows
    }

    /// Smallest ζ allowed at `y`: the ζ lower bound or the deepest
    /// optimality cut.
    pub fn zeta_star(&self, y: &[f64]) -> f64 {
        self.cuts
            .iter()
            .filter(|c| c.kind == CutKind::Optimality)
            .map(|c| c.value_at(y))
            .fold(self.zeta_lo, f64::max)
    }

    pub fn objective(&self, y: &[f64], zeta: f64) -> f64 {
        zeta + dot(&self.d_cost, y)
    }

    /// Whether `y` satisfies the bounds, structural rows and feasibility cuts.
    pub fn is_feasible_y(&self, y: &[f64], tol: f64) -> bool {
        y.iter()
            .zip(&self.int_upper)
            .all(|(&v, &u)| v >= 0.0 && v <= u as f64)
            && self
                .rows
                .iter()
                .filter(|r| r.zeta == 0.0)
                .all(|r| r.is_satisfied(y, 0.0, tol))
            && self
                .cuts
                .iter()
                .filter(|c| c.kind == CutKind::Feasibility)
                .all(|c| c.violation(y, 0.0) <= tol * (1.0 + c.rhs.abs()))
    }

    /// Greedy descent on the violation of the rows that do not involve ζ.
    /// Each step moves one integer by ±1, picking the largest violation
    /// decrease and then the smallest objective. Returns `None` when the
    /// descent gets stuck before reaching a feasible point.
    pub fn repair_y(&self, y: &[i64], max_steps: usize) -> Option<Vec<i64>> {
        let rows: Vec<(Vec<(usize, f64)>, f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.zeta == 0.0)
            .map(|r| (r.coeffs.clone(), r.rhs))
            .chain(self.cuts.iter().filter(|c| c.kind == CutKind::Feasibility).map(|c| {
                let coeffs = c.coeff_y.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, &a)| (j, a));
                // the cut reads −coeff_y·y >= rhs
                (coeffs.map(|(j, a)| (j, -a)).collect(), c.rhs)
            }))
            .map(|(coeffs, rhs)| {
                let scale = coeffs.iter().map(|&(_, a): &(usize, f64)| a.abs()).fold(0.0, f64::max).max(1e-12);
                (coeffs, rhs, scale)
            })
            .collect();
        let violation = |y: &[f64]| -> f64 {
            rows.iter()
                .map(|(coeffs, rhs, scale)| {
                    let act: f64 = coeffs.iter().map(|&(j, a)| a * y[j]).sum();
                    ((rhs - act) / scale - 1e-9).max(0.0)
                })
                .sum()
        };
        let mut y: Vec<f64> = y.iter().zip(&self.int_upper).map(|(&v, &u)| v.clamp(0, u) as f64).collect();
        let mut current = violation(&y);
        for _ in 0..max_steps {
            if current == 0.0 {
                break;
            }
            let mut best: Option<(f64, f64, usize, f64)> = None;
            for j in 0..y.len() {
                for step in [-1.0, 1.0] {
                    let v = y[j] + step;
                    if v < 0.0 || v > self.int_upper[j] as f64 {
                        continue;
                    }
                    let old = y[j];
                    y[j] = v;
                    let viol = violation(&y);
                    let obj = self.objective(&y, self.zeta_star(&y));
                    y[j] = old;
                    if viol < current - 1e-12
                        && best.is_none_or(|(bv, bo, _, _)| viol < bv - 1e-12 || (viol <= bv + 1e-12 && obj < bo))
                    {
                        best = Some((viol, obj, j, v));
                    }
                }
            }
            let (viol, _, j, v) = best?;
            y[j] = v;
            current = viol;
        }
        let y: Vec<i64> = y.iter().map(|&v| v as i64).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        self.is_feasible_y(&yf, 1e-9).then_some(y)
    }

    /// Steepest descent on `ζ*(y) + d·y` over feasible ±1 neighbours, with
    /// moves of two variables at once when no single move improves.
    pub fn polish_y(&self, y: &[i64], max_steps: usize) -> Vec<i64> {
        let mut y: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let n = y.len();
        let mut current = self.objective(&y, self.zeta_star(&y));
        let fits = |j: usize, v: f64| v >= 0.0 && v <= self.int_upper[j] as f64;
        for _ in 0..max_steps {
            let threshold = current - 1e-9 * (1.0 + current.abs());
            let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
            let consider = |y: &mut Vec<f64>, moves: &[(usize, f64)], best: &mut Option<(f64, Vec<(usize, f64)>)>| {
                let old: Vec<f64> = moves.iter().map(|&(j, _)| y[j]).collect();
                for &(j, v) in moves {
                    y[j] = v;
                }
                let obj = self.objective(y, self.zeta_star(y));
                if obj < threshold && best.as_ref().is_none_or(|(bo, _)| obj < *bo) && self.is_feasible_y(y, 1e-9) {
                    *best = Some((obj, moves.to_vec()));
                }
                for (&(j, _), o) in moves.iter().zip(old) {
                    y[j] = o;
                }
            };
            for j in 0..n {
                for step in [-1.0, 1.0] {
                    let v = y[j] + step;
                    if fits(j, v) {
                        consider(&mut y, &[(j, v)], &mut best);
                    }
                }
            }
            if best.is_none() {
                for j in 0..n {
                    for k in j + 1..n {
                        for (a, b) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                            let (vj, vk) = (y[j] + a, y[k] + b);
                            if fits(j, vj) && fits(k, vk) {
                                consider(&mut y, &[(j, vj), (k, vk)], &mut best);
                            }
                        }
                    }
                }
            }
            let Some((obj, moves)) = best else { break };
            for (j, v) in moves {
                y[j] = v;
            }
            current = obj;
        }
        y.iter().map(|&v| v as i64).collect()
    }

    /// The master as a MILP with one continuous column `ζ − ζ_lo` and the
    /// integer columns of the original model.
    pub fn to_milp(&self) -> StandardMilp {
        let rows = self.all_rows();
        let n = self.n_int();
        let mut a = Vec::new();
        let mut bm = Vec::new();
        let mut b = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.zeta != 0.0 {
                a.push((i, 0, r.zeta));
            }
            bm.extend(r.coeffs.iter().map(|&(j, v)| (i, j, v)));
            b.push(r.rhs - r.zeta * self.zeta_lo);
        }
        let mut milp = StandardMilp::from_parts(
            vec![1.0],
            self.d_cost.clone(),
            SparseMatrix::from_triplets(rows.len(), 1, a),
            SparseMatrix::from_triplets(rows.len(), n, bm),
            b,
            self.int_upper.clone(),
        )
        .expect("master dimensions are consistent");
        milp.objective_offset = self.zeta_lo;
        milp
    }
}
