//! Master problem to QUBO.
//!
//! Bits are laid out as: integer variables (in index order), then ζ, then
//! one slack block per compiled row. Every row `lhs >= rhs` is brought onto
//! an integer grid of spacing `g`, so that with integer slack `s` the
//! residual `R = lhs/g − rhs/g − s` is an exact integer, and the penalty
//! `w · R²` with `w = ρ g²` is added to the objective `ζ + d·y`.
//!
//! Grids:
//!
//! * rows containing ζ use `g = δ_ζ`; coefficients are rounded up and the
//!   right-hand side down, so the quantized row is implied by the exact one;
//! * other rows use the coarsest decimal grid `10^-p`, `p <= 6`, that
//!   represents them exactly;
//! * otherwise a power-of-two grid about 1/256 of the largest coefficient,
//!   rounded the same conservative way, and refined until the row still
//!   cuts off its recorded `exclude` point.

use serde::{Deserialize, Serialize};

use super::encoding::{encode_value, BinaryEncoding, Owner};
use super::{Qubo, QuboError};
use crate::benders::{MasterProblem, MasterRow, RowOrigin};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyPolicy {
    /// `ρ₀ g² = ⌈initial_factor · max(objective bound, 1)⌉ + 1`.
    pub initial_factor: f64,
    pub escalation_factor: f64,
    pub max_escalations: u32,
}

impl Default for PenaltyPolicy {
    fn default() -> Self {
        Self {
            initial_factor: 2.0,
            escalation_factor: 10.0,
            max_escalations: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledRow {
    pub origin: RowOrigin,
    pub grid: f64,
    /// Weight of the ζ codeword (0 or 1).
    pub zeta_weight: i64,
    pub weights: Vec<(usize, i64)>,
    /// Right-hand side in grid units, with the ζ offset folded in.
    pub rhs: i64,
    pub slack: BinaryEncoding,
    /// Penalty per squared grid unit, `ρ g²`.
    pub weight: f64,
    pub escalations: u32,
}

impl CompiledRow {
    /// Penalty coefficient in the row's original units.
    pub fn rho(&self) -> f64 {
        self.weight / (self.grid * self.grid)
    }

    /// `(bit, coefficient)` pairs of `R` in grid units.
    fn terms(&self, zeta: &BinaryEncoding, ints: &[BinaryEncoding]) -> Vec<(usize, f64)> {
        let pow = |k: usize| (1u64 << k) as f64;
        let mut t = Vec::new();
        for &(j, w) in &self.weights {
            for (k, b) in ints[j].bits().enumerate() {
                t.push((b, w as f64 * pow(k)));
            }
        }
        if self.zeta_weight != 0 {
            for (k, b) in zeta.bits().enumerate() {
                t.push((b, self.zeta_weight as f64 * pow(k)));
            }
        }
        for (k, b) in self.slack.bits().enumerate() {
            t.push((b, -pow(k)));
        }
        t
    }

    /// Constant part of `lhs − rhs − slack` in grid units.
    fn constant(&self) -> i64 {
        -self.rhs - self.slack.offset as i64
    }

    /// Exact residual of the assignment in grid units.
    pub fn residual(&self, zeta: &BinaryEncoding, ints: &[BinaryEncoding], bits: &[u8]) -> i128 {
        let mut r = self.constant() as i128;
        for &(j, w) in &self.weights {
            r += w as i128 * ints[j].code(bits) as i128;
        }
        r += self.zeta_weight as i128 * zeta.code(bits) as i128;
        r - self.slack.code(bits) as i128
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledMaster {
    #[serde(skip)]
    pub qubo: Qubo,
    pub zeta: BinaryEncoding,
    pub ints: Vec<BinaryEncoding>,
    pub rows: Vec<CompiledRow>,
    pub d_cost: Vec<f64>,
    /// Bound on `|ζ + d·y|` over the encoded box.
    pub objective_bound: f64,
    pub policy: PenaltyPolicy,
}

/// Decoded view of one bit assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterSample {
    pub y: Vec<i64>,
    pub zeta: f64,
    /// `ζ + d·y` at the decoded point.
    pub objective: f64,
    pub residuals: Vec<i128>,
    /// `g·|R|` per row, in the row's own units.
    pub violations: Vec<f64>,
    pub energy: f64,
}

impl MasterSample {
    pub fn is_feasible(&self) -> bool {
        self.residuals.iter().all(|&r| r == 0)
    }

    pub fn y_f64(&self) -> Vec<f64> {
        self.y.iter().map(|&v| v as f64).collect()
    }
}

impl CompiledMaster {
    pub fn n_bits(&self) -> usize {
        self.qubo.n_bits()
    }

    /// Sum of `w_i R_i²` over rows.
    pub fn penalty(&self, bits: &[u8]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let res = r.residual(&self.zeta, &self.ints, bits) as f64;
                r.weight * res * res
            })
            .sum()
    }

    pub fn decode_y(&self, bits: &[u8]) -> Vec<i64> {
        self.ints.iter().map(|e| e.code(bits) as i64).collect()
    }

    /// Bits for `(y, ζ)` with every slack set to the value that zeroes its
    /// residual where possible.
    pub fn encode_point(&self, y: &[i64], zeta: f64) -> Vec<u8> {
        let mut bits = vec![0u8; self.n_bits()];
        for (e, &v) in self.ints.iter().zip(y) {
            e.write(v as f64, &mut bits);
        }
        let code = ((zeta - self.zeta.offset) / self.zeta.step - 1e-9).ceil().max(0.0);
        self.zeta.write(self.zeta.value_of(code.min(self.zeta.max_code() as f64) as u64), &mut bits);
        for r in &self.rows {
            let before = r.residual(&self.zeta, &self.ints, &bits);
            let s = before.clamp(0, r.slack.max_code() as i128) as u64;
            for (k, b) in r.slack.bits().enumerate() {
                bits[b] = ((s >> k) & 1) as u8;
            }
        }
        bits
    }
}

fn near_int(v: f64) -> Option<f64> {
    let r = v.round();
    ((v - r).abs() <= 1e-9 * v.abs().max(1.0)).then_some(r)
}

fn ceil_tol(v: f64) -> f64 {
    near_int(v).unwrap_or_else(|| v.ceil())
}

fn floor_tol(v: f64) -> f64 {
    near_int(v).unwrap_or_else(|| v.floor())
}

const INT_LIMIT: f64 = 4_503_599_627_370_496.0; // 2^52

fn to_i64(v: f64, row: usize) -> Result<i64, QuboError> {
    if v.abs() >= INT_LIMIT || !v.is_finite() {
        Err(QuboError::SlackOverflow(row))
    } else {
        Ok(v as i64)
    }
}

struct GridRow {
    grid: f64,
    zeta_weight: i64,
    weights: Vec<(usize, i64)>,
    rhs: i64,
}

fn decimal_grid(row: &MasterRow) -> Option<f64> {
    (0..=6).map(|p| 10f64.powi(p)).find_map(|s| {
        let all = row
            .coeffs
            .iter()
            .map(|&(_, a)| a)
            .chain(std::iter::once(row.rhs))
            .all(|v| near_int(v * s).is_some());
        all.then_some(1.0 / s)
    })
}

fn quantize_row(row: &MasterRow, index: usize, zeta: &BinaryEncoding) -> Result<GridRow, QuboError> {
    let conservative = |g: f64, rhs: f64| -> Result<GridRow, QuboError> {
        let mut weights = Vec::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            let w = to_i64(ceil_tol(a / g), index)?;
            if w != 0 {
                weights.push((j, w));
            }
        }
        Ok(GridRow {
            grid: g,
            zeta_weight: 0,
            weights,
            rhs: to_i64(floor_tol(rhs / g), index)?,
        })
    };
    if row.zeta != 0.0 {
        // Scale so ζ has coefficient one, then measure in ζ steps.
        let s = row.zeta;
        if s < 0.0 {
            return Err(QuboError::InvalidRange {
                owner: Owner::Slack(index),
                lo: s,
                hi: s,
                step: zeta.step,
            });
        }
        let mut weights = Vec::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            let w = to_i64(ceil_tol(a / s / zeta.step), index)?;
            if w != 0 {
                weights.push((j, w));
            }
        }
        return Ok(GridRow {
            grid: zeta.step,
            zeta_weight: 1,
            weights,
            rhs: to_i64(floor_tol((row.rhs / s - zeta.offset) / zeta.step), index)?,
        });
    }
    if let Some(g) = decimal_grid(row) {
        let mut weights = Vec::new();
        for &(j, a) in &row.coeffs {
            let w = to_i64((a / g).round(), index)?;
            if w != 0 {
                weights.push((j, w));
            }
        }
        return Ok(GridRow {
            grid: g,
            zeta_weight: 0,
            weights,
            rhs: to_i64((row.rhs / g).round(), index)?,
        });
    }
    let amax = row.coeffs.iter().map(|&(_, a)| a.abs()).fold(0.0, f64::max);
    let mut g = if amax > 0.0 {
        2f64.powi((amax / 256.0).log2().floor() as i32)
    } else {
        2f64.powi(row.rhs.abs().max(1.0).log2().floor() as i32 - 8)
    };
    for _ in 0..40 {
        let q = conservative(g, row.rhs)?;
        let still_excludes = match &row.exclude {
            None => true,
            Some(p) => {
                let lhs: i128 = q.weights.iter().map(|&(j, w)| w as i128 * p[j] as i128).sum();
                lhs < q.rhs as i128
            }
        };
        if still_excludes {
            return Ok(q);
        }
        g /= 2.0;
    }
    conservative(g, row.rhs)
}

/// Layout and penalty weights; the QUBO itself is built by [`build_qubo`].
pub fn compile_master(master: &MasterProblem, policy: &PenaltyPolicy, delta_zeta: f64) -> Result<CompiledMaster, QuboError> {
    if !master.zeta_hi.is_finite() || !master.zeta_lo.is_finite() {
        return Err(QuboError::UnboundedZeta);
    }
    let mut next = 0usize;
    let mut ints = Vec::with_capacity(master.n_int());
    for (j, &u) in master.int_upper.iter().enumerate() {
        let mut e = encode_value(Owner::Integer(j), 0.0, u as f64, 1.0)?;
        e.first_bit = next;
        next += e.n_bits;
        ints.push(e);
    }
    let mut zeta = encode_value(Owner::Zeta, master.zeta_lo, master.zeta_hi.max(master.zeta_lo), delta_zeta)?;
    zeta.first_bit = next;
    next += zeta.n_bits;

    let mut bound = master.zeta_lo.abs().max(zeta.upper().abs());
    for (e, d) in ints.iter().zip(&master.d_cost) {
        bound += d.abs() * e.max_code() as f64;
    }
    // strictly above the objective range, so one unit of violation never ties
    let weight = (policy.initial_factor * bound.max(1.0)).ceil() + 1.0;

    let mut source = master.all_rows();
    for (j, (e, &u)) in ints.iter().zip(&master.int_upper).enumerate() {
        if (u as u64) < e.max_code() {
            source.push(MasterRow {
                coeffs: vec![(j, -1.0)],
                zeta: 0.0,
                rhs: -(u as f64),
                origin: RowOrigin::IntegerBound(j),
                exclude: None,
            });
        }
    }

    let mut rows = Vec::new();
    for (i, row) in source.iter().enumerate() {
        let q = quantize_row(row, i, &zeta)?;
        let index = rows.len();
        let mut lo: i128 = 0;
        let mut hi: i128 = 0;
        // bound rows must see the full encoded range or they look redundant
        let is_bound = matches!(row.origin, RowOrigin::IntegerBound(_));
        for &(j, w) in &q.weights {
            let u = if is_bound { ints[j].max_code() as i128 } else { master.int_upper[j] as i128 };
            if w > 0 {
                hi += w as i128 * u;
            } else {
                lo += w as i128 * u;
            }
        }
        hi += q.zeta_weight as i128 * zeta.max_code() as i128;
        let rhs = q.rhs as i128;
        if hi < rhs {
            return Err(QuboError::InfeasibleRow(i));
        }
        if lo >= rhs {
            continue;
        }
        let width = (hi - rhs) as f64;
        if width >= INT_LIMIT {
            return Err(QuboError::SlackOverflow(i));
        }
        let mut slack = encode_value(Owner::Slack(index), 0.0, width, 1.0).map_err(|_| QuboError::SlackOverflow(i))?;
        slack.first_bit = next;
        next += slack.n_bits;
        rows.push(CompiledRow {
            origin: row.origin,
            grid: q.grid,
            zeta_weight: q.zeta_weight,
            weights: q.weights,
            rhs: q.rhs,
            slack,
            weight,
            escalations: 0,
        });
    }

    let mut cm = CompiledMaster {
        qubo: Qubo::new(next),
        zeta,
        ints,
        rows,
        d_cost: master.d_cost.clone(),
        objective_bound: bound,
        policy: *policy,
    };
    cm.qubo = build_qubo(&cm);
    Ok(cm)
}

/// Expands `ζ + d·y + Σ w_i R_i²` with `f² = f`.
pub fn build_qubo(cm: &CompiledMaster) -> Qubo {
    let n: usize = cm.ints.iter().map(|e| e.n_bits).sum::<usize>()
        + cm.zeta.n_bits
        + cm.rows.iter().map(|r| r.slack.n_bits).sum::<usize>();
    let mut q = Qubo::new(n);
    q.add_constant(cm.zeta.offset);
    for (k, b) in cm.zeta.bits().enumerate() {
        q.add_linear(b, cm.zeta.step * (1u64 << k) as f64);
    }
    for (e, &d) in cm.ints.iter().zip(&cm.d_cost) {
        for (k, b) in e.bits().enumerate() {
            q.add_linear(b, d * (1u64 << k) as f64);
        }
    }
    for r in &cm.rows {
        let terms = r.terms(&cm.zeta, &cm.ints);
        let k0 = r.constant() as f64;
        let w = r.weight;
        q.add_constant(w * k0 * k0);
        for (a, &(i, ci)) in terms.iter().enumerate() {
            q.add_linear(i, w * (ci * ci + 2.0 * k0 * ci));
            for &(j, cj) in &terms[a + 1..] {
                q.add_quadratic(i, j, 2.0 * w * ci * cj);
            }
        }
    }
    q
}

pub fn extract_solution(cm: &CompiledMaster, bits: &[u8]) -> Result<MasterSample, QuboError> {
    let energy = cm.qubo.energy(bits)?;
    let y = cm.decode_y(bits);
    let zeta = cm.zeta.decode(bits);
    let objective = zeta + y.iter().zip(&cm.d_cost).map(|(&v, d)| v as f64 * d).sum::<f64>();
    let residuals: Vec<i128> = cm.rows.iter().map(|r| r.residual(&cm.zeta, &cm.ints, bits)).collect();
    let violations = residuals
        .iter()
        .zip(&cm.rows)
        .map(|(&r, row)| r.unsigned_abs() as f64 * row.grid)
        .collect();
    Ok(MasterSample {
        y,
        zeta,
        objective,
        residuals,
        violations,
        energy,
    })
}

/// Multiplies the weight of every violated row by the escalation factor.
pub fn escalate_penalties(cm: &CompiledMaster, sample: &MasterSample) -> Result<CompiledMaster, QuboError> {
    let mut out = cm.clone();
    let mut changed = false;
    for (i, (row, &r)) in out.rows.iter_mut().zip(&sample.residuals).enumerate() {
        if r == 0 {
            continue;
        }
        if row.escalations >= cm.policy.max_escalations {
            return Err(QuboError::EscalationExhausted(i));
        }
        row.weight *= cm.policy.escalation_factor;
        row.escalations += 1;
        changed = true;
    }
    if changed {
        out.qubo = build_qubo(&out);
    }
    Ok(out)
}
