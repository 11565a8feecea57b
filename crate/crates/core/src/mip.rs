//! Best-first branch and bound over [`StandardMilp`] models.
//!
//! This is the exact reference path: it solves the original MILP directly
//! and also serves as the exact master-problem backend of the Benders loop.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::lp::{solve_lp, LpError, LpOutcome, LpTolerances};
use crate::model::{lp_relaxation, StandardMilp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchAndBoundConfig {
    /// Relative gap `(UB − LB) / max(|UB|, 1)` at which a node is pruned.
    pub gap_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: usize,
    pub lp: LpTolerances,
}

impl Default for BranchAndBoundConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            integrality_tol: 1e-6,
            node_limit: 200_000,
            lp: LpTolerances::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MipOutcome {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub wall_time: Duration,
}

impl MipOutcome {
    pub fn has_incumbent(&self) -> bool {
        self.objective.is_finite()
    }
}

pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if !ub.is_finite() || !lb.is_finite() {
        return f64::INFINITY;
    }
    ((ub - lb) / ub.abs().max(1.0)).max(0.0)
}

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one with the
    // lowest bound, then the deepest, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Solves the MILP to within `gap_tol`.
pub fn branch_and_bound(m: &StandardMilp, cfg: &BranchAndBoundConfig) -> Result<MipOutcome, LpError> {
    branch_and_bound_excluding(m, cfg, &[])
}

/// Like [`branch_and_bound`], but integer points listed in `forbidden` are
/// never accepted as incumbents.
pub fn branch_and_bound_excluding(
    m: &StandardMilp,
    cfg: &BranchAndBoundConfig,
    forbidden: &[Vec<i64>],
) -> Result<MipOutcome, LpError> {
    let start = Instant::now();
    let forbidden: HashSet<&[i64]> = forbidden.iter().map(|v| v.as_slice()).collect();
    let template = lp_relaxation(m);
    let nc = m.n_cont;

    let mut best_obj = f64::INFINITY;
    let mut best_x = Vec::new();
    let mut best_y = Vec::new();
    let mut nodes = 0usize;
    let mut next_id = 1usize;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        lo: vec![0; m.n_int],
        hi: m.int_upper.clone(),
    });

    let prune_at = |ub: f64| ub - cfg.gap_tol * ub.abs().max(1.0);
    let mut open_bound = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if best_obj.is_finite() && node.bound >= prune_at(best_obj) {
            continue;
        }
        if nodes >= cfg.node_limit {
            open_bound = node.bound;
            heap.push(node);
            break;
        }
        nodes += 1;
        let mut lp = template.clone();
        for j in 0..m.n_int {
            lp.lower[nc + j] = node.lo[j] as f64;
            lp.upper[nc + j] = node.hi[j] as f64;
        }
        let sol = match solve_lp(&lp, &cfg.lp)? {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible(_) => continue,
            LpOutcome::Unbounded { .. } => {
                return Ok(MipOutcome {
                    status: MipStatus::Unbounded,
                    x: Vec::new(),
                    y: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    bound: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                    nodes,
                    wall_time: start.elapsed(),
                });
            }
        };
        if best_obj.is_finite() && sol.objective >= prune_at(best_obj) {
            continue;
        }
        let yv = &sol.x[nc..];
        let mut branch_var = None;
        let mut best_score = f64::INFINITY;
        for (j, &v) in yv.iter().enumerate() {
            let frac = v - v.floor();
            if frac > cfg.integrality_tol && frac < 1.0 - cfg.integrality_tol {
                let score = (frac - 0.5).abs();
                if score < best_score {
                    best_score = score;
                    branch_var = Some(j);
                }
            }
        }
        let mut push_child = |lo: Vec<i64>, hi: Vec<i64>, heap: &mut BinaryHeap<Node>| {
            heap.push(Node {
                bound: sol.objective,
                depth: node.depth + 1,
                id: next_id,
                lo,
                hi,
            });
            next_id += 1;
        };
        match branch_var {
            Some(j) => {
                let v = yv[j];
                let mut hi = node.hi.clone();
                hi[j] = v.floor() as i64;
                push_child(node.lo.clone(), hi, &mut heap);
                let mut lo = node.lo.clone();
                lo[j] = v.ceil() as i64;
                push_child(lo, node.hi.clone(), &mut heap);
            }
            None => {
                let y_int: Vec<i64> = yv.iter().map(|v| v.round() as i64).collect();
                if forbidden.contains(y_int.as_slice()) {
                    // Split the box around the forbidden point on its first free
                    // coordinate; the middle child is the point's slice.
                    if let Some(j) = (0..m.n_int).find(|&j| node.lo[j] < node.hi[j]) {
                        let v = y_int[j];
                        if node.lo[j] < v {
                            let mut hi = node.hi.clone();
                            hi[j] = v - 1;
                            push_child(node.lo.clone(), hi, &mut heap);
                        }
                        let mut lo = node.lo.clone();
                        let mut hi = node.hi.clone();
                        lo[j] = v;
                        hi[j] = v;
                        push_child(lo, hi, &mut heap);
                        if v < node.hi[j] {
                            let mut lo = node.lo.clone();
                            lo[j] = v + 1;
                            push_child(lo, node.hi.clone(), &mut heap);
                        }
                    }
                    continue;
                }
                let y: Vec<f64> = y_int.iter().map(|&v| v as f64).collect();
                let x = sol.x[..nc].to_vec();
                let obj = m.objective(&x, &y);
                if obj < best_obj {
                    best_obj = obj;
                    best_x = x;
                    best_y = y;
                }
            }
        }
    }

    let heap_bound = heap.iter().map(|n| n.bound).fold(open_bound, f64::min);
    let limited = !heap.is_empty();
    let bound = if limited { heap_bound.min(best_obj) } else { best_obj };
    let status = if limited {
        MipStatus::NodeLimit
    } else if best_obj.is_finite() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    Ok(MipOutcome {
        status,
        gap: relative_gap(best_obj, bound),
        x: best_x,
        y: best_y,
        objective: best_obj,
        bound,
        nodes,
        wall_time: start.elapsed(),
    })
}
