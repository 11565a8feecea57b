//! Quadratic unconstrained binary optimization problems.
//!
//! [`Qubo`] is the bare quadratic form `E(f) = constant + Σ a_i f_i +
//! Σ_{i<j} Q_ij f_i f_j` that samplers see. [`compile`] turns a Benders
//! master problem into one, keeping the variable map needed to read the
//! integer decisions back out.

pub mod compile;
pub mod encoding;
mod io;

pub use compile::{
    compile_master, escalate_penalties, extract_solution, CompiledMaster, CompiledRow, MasterSample,
    PenaltyPolicy,
};
pub use encoding::{encode_value, BinaryEncoding, Owner};
pub use io::{parse_qubo, write_qubo};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("invalid range [{lo}, {hi}] with step {step} for {owner:?}")]
    InvalidRange { owner: Owner, lo: f64, hi: f64, step: f64 },
    #[error("range [{lo}, {hi}] with step {step} for {owner:?} needs more than {} bits", encoding::MAX_BITS)]
    RangeOverflow { owner: Owner, lo: f64, hi: f64, step: f64 },
    #[error("master row {0} needs a slack range that cannot be encoded")]
    SlackOverflow(usize),
    #[error("master row {0} cannot be satisfied anywhere in the encoded box")]
    InfeasibleRow(usize),
    #[error("surrogate variable has no finite upper bound")]
    UnboundedZeta,
    #[error("penalty escalation budget exhausted on row {0}")]
    EscalationExhausted(usize),
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed QUBO file at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qubo {
    n: usize,
    constant: f64,
    linear: Vec<f64>,
    /// Upper triangle, keyed by `(i, j)` with `i < j`.
    quadratic: BTreeMap<(usize, usize), f64>,
}

impl Qubo {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            constant: 0.0,
            linear: vec![0.0; n],
            quadratic: BTreeMap::new(),
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn add_constant(&mut self, v: f64) {
        self.constant += v;
    }

    pub fn add_linear(&mut self, i: usize, v: f64) {
        self.linear[i] += v;
    }

    /// Adds `v · f_i f_j`; the diagonal folds into the linear term because
    /// `f² = f`, and `(j, i)` folds into `(i, j)`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.linear[i] += v;
        } else {
            let key = if i < j { (i, j) } else { (j, i) };
            *self.quadratic.entry(key).or_insert(0.0) += v;
        }
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    /// Exact energy of an assignment; terms are summed in a fixed order.
    pub fn energy(&self, bits: &[u8]) -> Result<f64, QuboError> {
        if bits.len() != self.n {
            return Err(QuboError::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        Ok(self.energy_unchecked(bits))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[u8]) -> f64 {
        let mut e = self.constant;
        for (a, &b) in self.linear.iter().zip(bits) {
            if b != 0 {
                e += a;
            }
        }
        for (&(i, j), &q) in &self.quadratic {
            if bits[i] != 0 && bits[j] != 0 {
                e += q;
            }
        }
        e
    }

    /// Neighbour lists `i -> [(j, Q_ij)]` for incremental energy updates.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(i, j), &q) in &self.quadratic {
            if q != 0.0 {
                adj[i].push((j, q));
                adj[j].push((i, q));
            }
        }
        adj
    }

    /// True when every coefficient is an integer small enough that f64
    /// sums of them are exact.
    pub fn is_integral(&self) -> bool {
        const LIMIT: f64 = 4_503_599_627_370_496.0; // 2^52
        let mut total = self.constant.abs();
        let ok = |v: f64| v.fract() == 0.0;
        if !ok(self.constant) {
            return false;
        }
        for &a in self.linear.iter().chain(self.quadratic.values()) {
            if !ok(a) {
                return false;
            }
            total += a.abs();
        }
        total < LIMIT
    }

    /// Sub-problem over `block` with every other bit clamped to its value
    /// in `assignment`. Energies of the result equal full energies of the
    /// corresponding completed assignment.
    pub fn clamp(&self, block: &[usize], assignment: &[u8]) -> Qubo {
        let mut local = vec![usize::MAX; self.n];
        for (k, &b) in block.iter().enumerate() {
            local[b] = k;
        }
        let mut sub = Qubo::new(block.len());
        sub.constant = self.constant;
        for i in 0..self.n {
            if local[i] == usize::MAX {
                if assignment[i] != 0 {
                    sub.constant += self.linear[i];
                }
            } else {
                sub.linear[local[i]] += self.linear[i];
            }
        }
        for (&(i, j), &q) in &self.quadratic {
            match (local[i] != usize::MAX, local[j] != usize::MAX) {
                (true, true) => sub.add_quadratic(local[i], local[j], q),
                (true, false) => {
                    if assignment[j] != 0 {
                        sub.linear[local[i]] += q;
                    }
                }
                (false, true) => {
                    if assignment[i] != 0 {
                        sub.linear[local[j]] += q;
                    }
                }
                (false, false) => {
                    if assignment[i] != 0 && assignment[j] != 0 {
                        sub.constant += q;
                    }
                }
            }
        }
        sub
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_qubo_has_zero_energy() {
        let q = Qubo::new(3);
        for mask in 0..8u8 {
            let bits: Vec<u8> = (0..3).map(|i| mask >> i & 1).collect();
            assert_eq!(q.energy(&bits).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_linear_term() {
        let mut q = Qubo::new(1);
        q.add_linear(0, 2.5);
        assert_eq!(q.energy(&[0]).unwrap(), 0.0);
        assert_eq!(q.energy(&[1]).unwrap(), 2.5);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            Qubo::new(2).energy(&[1]),
            Err(QuboError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn symmetric_pairs_fold() {
        let mut q = Qubo::new(2);
        q.add_quadratic(1, 0, 1.5);
        q.add_quadratic(0, 1, 0.5);
        q.add_quadratic(1, 1, 3.0);
        assert_eq!(q.quadratic().len(), 1);
        assert_eq!(q.coupling(0, 1), 2.0);
        assert_eq!(q.linear()[1], 3.0);
    }

    fn random_qubo(rng: &mut ChaCha8Rng, n: usize) -> Qubo {
        let mut q = Qubo::new(n);
        q.add_constant(rng.gen_range(-5.0..5.0));
        for i in 0..n {
            q.add_linear(i, rng.gen_range(-5.0..5.0));
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    q.add_quadratic(i, j, rng.gen_range(-5.0..5.0));
                }
            }
        }
        q
    }

    /// Independent evaluator: `x^T M x` with a dense symmetric matrix whose
    /// diagonal carries the linear terms.
    fn dense_energy(q: &Qubo, bits: &[u8]) -> f64 {
        let n = q.n_bits();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = q.linear()[i];
        }
        for (&(i, j), &v) in q.quadratic() {
            m[i][j] += v / 2.0;
            m[j][i] += v / 2.0;
        }
        let x: Vec<f64> = bits.iter().map(|&b| b as f64).collect();
        let mut e = q.constant();
        for i in 0..n {
            for j in 0..n {
                e += x[i] * m[i][j] * x[j];
            }
        }
        e
    }

    #[test]
    fn energy_matches_dense_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let q = random_qubo(&mut rng, n);
            for _ in 0..20 {
                let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
                let a = q.energy(&bits).unwrap();
                let b = dense_energy(&q, &bits);
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn clamped_subproblem_energy_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_qubo(&mut rng, 9);
        let base: Vec<u8> = (0..9).map(|_| rng.gen_range(0..2)).collect();
        let block = [1usize, 4, 7];
        let sub = q.clamp(&block, &base);
        for mask in 0..8u8 {
            let local: Vec<u8> = (0..3).map(|i| mask >> i & 1).collect();
            let mut full = base.clone();
            for (k, &b) in block.iter().enumerate() {
                full[b] = local[k];
            }
            let a = sub.energy(&local).unwrap();
            let b = q.energy(&full).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}
