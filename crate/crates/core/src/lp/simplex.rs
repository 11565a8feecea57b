use log::trace;

use super::{FarkasRay, LpError, LpOutcome, LpProblem, LpSolution, LpTolerances};
use crate::model::Sense;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Equality-form problem `M z = h`, `z >= 0`, `h >= 0`, over structural,
/// slack and artificial columns.
struct Simplex<'a> {
    tol: &'a LpTolerances,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    kind: Vec<ColKind>,
    h: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    barred: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded { entering: usize, alpha: Vec<f64> },
}

impl<'a> Simplex<'a> {
    fn dual_values(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &col) in self.basis.iter().enumerate() {
            let cb = cost[col];
            if cb != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += cb * b;
                }
            }
        }
        y
    }

    fn column_image(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.cols[q] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut dense = vec![0.0; m * m];
        for (k, &col) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[col] {
                dense[r * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting on `dense`, mirrored on `inv`.
        for c in 0..m {
            let mut p = c;
            let mut best = dense[c * m + c].abs();
            for r in c + 1..m {
                let v = dense[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-12 {
                return Err(LpError::NumericalFailure(format!(
                    "basis column {c} has no usable pivot (max {best:e})"
                )));
            }
            if p != c {
                for k in 0..m {
                    dense.swap(c * m + k, p * m + k);
                    inv.swap(c * m + k, p * m + k);
                }
            }
            let piv = dense[c * m + c];
            for k in 0..m {
                dense[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = dense[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        dense[r * m + k] -= f * dense[c * m + k];
                        inv[r * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.h).map(|(b, h)| b * h).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], theta: f64) {
        let m = self.m;
        for i in 0..m {
            self.xb[i] -= theta * alpha[i];
        }
        self.xb[r] = theta;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for k in 0..m {
                let v = self.binv[r * m + k];
                if v != 0.0 {
                    self.binv[i * m + k] -= f * v;
                }
            }
        }
        let leaving = self.basis[r];
        self.in_basis[leaving] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.since_refactor += 1;
    }

    fn run_phase(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let mut stall = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::IterationLimit(self.tol.max_iterations));
            }
            if self.since_refactor >= self.tol.refactor_every {
                self.refactor()?;
            }
            let y = self.dual_values(cost);
            let mut entering = None;
            let mut best = -self.tol.optimality;
            for j in 0..self.cols.len() {
                if self.in_basis[j] || self.barred[j] {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let alpha = self.column_image(q);
            let mut leave: Option<usize> = None;
            let mut min_ratio = f64::INFINITY;
            for i in 0..self.m {
                if alpha[i] <= self.tol.pivot {
                    continue;
                }
                let ratio = self.xb[i].max(0.0) / alpha[i];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < min_ratio - 1e-12 {
                            true
                        } else if ratio <= min_ratio + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                alpha[i] > alpha[l]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    min_ratio = min_ratio.min(ratio);
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseEnd::Unbounded { entering: q, alpha });
            };
            let theta = self.xb[r].max(0.0) / alpha[r];
            trace!(
                "pivot {}: enter {q} leave {} theta {theta:e}{}",
                self.iterations,
                self.basis[r],
                if bland { " (bland)" } else { "" }
            );
            self.pivot(r, q, &alpha, theta);
            self.iterations += 1;
            if theta <= 1e-12 {
                stall += 1;
                if stall >= self.tol.degeneracy_stall {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(&c, &x)| cost[c] * x).sum()
    }

    /// Pivots zero-level artificials out of the basis where some other
    /// column has a nonzero entry in their row.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let m = self.m;
            let mut chosen = None;
            let mut best = 1e-7;
            for j in 0..self.cols.len() {
                if self.in_basis[j] || self.kind[j] == ColKind::Artificial {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(k, a)| self.binv[r * m + k] * a).sum();
                if v.abs() > best {
                    best = v.abs();
                    chosen = Some(j);
                }
            }
            if let Some(q) = chosen {
                let alpha = self.column_image(q);
                let theta = self.xb[r] / alpha[r];
                self.pivot(r, q, &alpha, theta);
            }
        }
    }
}

pub(super) fn solve(lp: &LpProblem, tol: &LpTolerances) -> Result<LpOutcome, LpError> {
    let n = lp.n_vars();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(LpError::InvalidInput("bound vectors do not match cost vector".into()));
    }
    for j in 0..n {
        if !lp.lower[j].is_finite() {
            return Err(LpError::InvalidInput(format!("variable {j} has no finite lower bound")));
        }
        if !lp.costs[j].is_finite() || lp.upper[j].is_nan() {
            return Err(LpError::InvalidInput(format!("variable {j} has non-finite data")));
        }
    }

    // Row list: user rows followed by one `x_j <= u_j − l_j` row per finite
    // upper bound.
    let bounded: Vec<usize> = (0..n).filter(|&j| lp.upper[j].is_finite()).collect();
    let m = lp.rows.len() + bounded.len();
    let mut flip = vec![1.0; m];
    let mut h = vec![0.0; m];
    let mut senses = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(LpError::InvalidInput(format!("row {i} has non-finite rhs")));
        }
        h[i] = row.rhs - row.coeffs.iter().map(|&(j, a)| a * lp.lower[j]).sum::<f64>();
        senses.push(row.sense);
    }
    for (k, &j) in bounded.iter().enumerate() {
        h[lp.rows.len() + k] = lp.upper[j] - lp.lower[j];
        senses.push(Sense::Le);
    }
    for i in 0..m {
        if h[i] < 0.0 {
            flip[i] = -1.0;
            h[i] = -h[i];
        }
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if j >= n {
                return Err(LpError::InvalidInput(format!("row {i} references variable {j}")));
            }
            if a != 0.0 {
                cols[j].push((i, a * flip[i]));
            }
        }
    }
    for (k, &j) in bounded.iter().enumerate() {
        let i = lp.rows.len() + k;
        cols[j].push((i, flip[i]));
    }
    for col in cols.iter_mut() {
        col.sort_by_key(|e| e.0);
        col.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
    }
    let mut kind = vec![ColKind::Structural; n];
    let mut basis = vec![usize::MAX; m];
    for i in 0..m {
        let coef = match senses[i] {
            Sense::Ge => Some(-1.0),
            Sense::Le => Some(1.0),
            Sense::Eq => None,
        };
        if let Some(c) = coef {
            let c = c * flip[i];
            cols.push(vec![(i, c)]);
            kind.push(ColKind::Slack);
            if c > 0.0 {
                basis[i] = cols.len() - 1;
            }
        }
    }
    for i in 0..m {
        if basis[i] == usize::MAX {
            cols.push(vec![(i, 1.0)]);
            kind.push(ColKind::Artificial);
            basis[i] = cols.len() - 1;
        }
    }
    let total = cols.len();
    let mut in_basis = vec![false; total];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let mut s = Simplex {
        tol,
        m,
        cols,
        kind,
        h: h.clone(),
        basis,
        in_basis,
        barred: vec![false; total],
        binv,
        xb: h.clone(),
        iterations: 0,
        since_refactor: 0,
    };

    let has_artificial = s.kind.contains(&ColKind::Artificial);
    let h_norm = h.iter().copied().fold(0.0, f64::max);
    if has_artificial {
        let cost1: Vec<f64> = s
            .kind
            .iter()
            .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        match s.run_phase(&cost1)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded { .. } => {
                return Err(LpError::NumericalFailure("phase 1 reported unbounded".into()));
            }
        }
        s.refactor()?;
        let infeas = s.objective(&cost1);
        if infeas > tol.feasibility * (1.0 + h_norm) {
            let y = s.dual_values(&cost1);
            return Ok(LpOutcome::Infeasible(farkas_from_phase_one(lp, &bounded, &flip, &senses, &y)));
        }
        s.drive_out_artificials();
        for j in 0..total {
            if s.kind[j] == ColKind::Artificial {
                s.barred[j] = true;
            }
        }
    }

    let mut cost2 = vec![0.0; total];
    cost2[..n].copy_from_slice(&lp.costs);
    let end = s.run_phase(&cost2)?;
    s.refactor()?;

    let mut shifted = vec![0.0; n];
    for (k, &col) in s.basis.iter().enumerate() {
        if col < n {
            shifted[col] = s.xb[k].max(0.0);
        }
    }
    let x: Vec<f64> = shifted.iter().zip(&lp.lower).map(|(v, l)| v + l).collect();

    match end {
        PhaseEnd::Unbounded { entering, alpha } => {
            let mut direction = vec![0.0; n];
            if entering < n {
                direction[entering] = 1.0;
            }
            for (k, &col) in s.basis.iter().enumerate() {
                if col < n {
                    direction[col] = -alpha[k];
                }
            }
            Ok(LpOutcome::Unbounded { x, direction })
        }
        PhaseEnd::Optimal => {
            let y = s.dual_values(&cost2);
            let mut duals = vec![0.0; lp.rows.len()];
            for i in 0..lp.rows.len() {
                duals[i] = clean_sign(y[i] * flip[i], senses[i]);
            }
            let mut bound_duals = vec![0.0; n];
            for (k, &j) in bounded.iter().enumerate() {
                let i = lp.rows.len() + k;
                bound_duals[j] = (y[i] * flip[i]).min(0.0);
            }
            Ok(LpOutcome::Optimal(LpSolution {
                objective: lp.objective(&x),
                x,
                duals,
                bound_duals,
                iterations: s.iterations,
            }))
        }
    }
}

fn clean_sign(v: f64, sense: Sense) -> f64 {
    match sense {
        Sense::Ge => v.max(0.0),
        Sense::Le => v.min(0.0),
        Sense::Eq => v,
    }
}

fn farkas_from_phase_one(lp: &LpProblem, bounded: &[usize], flip: &[f64], senses: &[Sense], y: &[f64]) -> FarkasRay {
    let n = lp.n_vars();
    let mut rows: Vec<f64> = (0..lp.rows.len()).map(|i| clean_sign(y[i] * flip[i], senses[i])).collect();
    let mut bounds = vec![0.0; n];
    for (k, &j) in bounded.iter().enumerate() {
        let i = lp.rows.len() + k;
        bounds[j] = (y[i] * flip[i]).min(0.0);
    }
    let scale = rows
        .iter()
        .chain(&bounds)
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale > 0.0 {
        rows.iter_mut().for_each(|v| *v /= scale);
        bounds.iter_mut().for_each(|v| *v /= scale);
    }
    FarkasRay { rows, bounds }
}
