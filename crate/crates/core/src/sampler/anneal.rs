//! Metropolis simulated annealing with geometric cooling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SampleSet, SamplerError, SamplerParams};
use crate::qubo::Qubo;

/// Temperatures of one anneal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub t_hi: f64,
    pub t_lo: f64,
    pub sweeps: usize,
}

impl Schedule {
    /// Self-scaling schedule: the start temperature is the largest
    /// single-flip energy change at a random probe state, the final one is
    /// `1e-3` of the mean absolute linear coefficient.
    pub fn auto(q: &Qubo, p: &SamplerParams, adj: &[Vec<(usize, f64)>]) -> Self {
        let n = q.n_bits();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(u64::MAX);
        let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let h = fields(q, adj, &x);
        let probe = (0..n)
            .map(|i| delta(x[i], h[i]).abs())
            .fold(0.0, f64::max);
        let t_hi = p.t_hi.unwrap_or(if probe > 0.0 { probe } else { 1.0 });
        let mean_lin = q.linear().iter().map(|a| a.abs()).sum::<f64>() / n.max(1) as f64;
        let mut t_lo = p.t_lo.unwrap_or(1e-3 * mean_lin);
        if !(t_lo > 0.0) || t_lo >= t_hi {
            t_lo = 1e-3 * t_hi;
        }
        Self {
            t_hi,
            t_lo,
            sweeps: p.sweeps_for(n),
        }
    }

    pub fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_lo;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_hi * (self.t_lo / self.t_hi).powf(frac)
    }
}

/// Local fields `h_i = a_i + Σ_j Q_ij x_j`.
pub(crate) fn fields(q: &Qubo, adj: &[Vec<(usize, f64)>], x: &[u8]) -> Vec<f64> {
    let mut h = q.linear().to_vec();
    for (i, row) in adj.iter().enumerate() {
        for &(j, v) in row {
            if x[j] != 0 {
                h[i] += v;
            }
        }
    }
    h
}

/// Energy change of flipping a bit with value `x` and field `h`.
#[inline]
pub(crate) fn delta(x: u8, h: f64) -> f64 {
    if x == 0 {
        h
    } else {
        -h
    }
}

#[inline]
pub(crate) fn flip(x: &mut [u8], h: &mut [f64], adj: &[Vec<(usize, f64)>], i: usize) {
    x[i] ^= 1;
    let sign = if x[i] == 1 { 1.0 } else { -1.0 };
    for &(j, v) in &adj[i] {
        h[j] += sign * v;
    }
}

/// Flips improving bits until none is left. Returns the proposals made.
pub(crate) fn descend(x: &mut [u8], h: &mut [f64], adj: &[Vec<(usize, f64)>]) -> u64 {
    let n = x.len();
    let mut attempts = 0u64;
    for _ in 0..1000 {
        let mut improved = false;
        for i in 0..n {
            attempts += 1;
            if delta(x[i], h[i]) < 0.0 {
                flip(x, h, adj, i);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    attempts
}

pub fn sample_sa(q: &Qubo, p: &SamplerParams) -> Result<SampleSet, SamplerError> {
    p.validate()?;
    let start = Instant::now();
    let n = q.n_bits();
    let adj = q.adjacency();
    let sched = Schedule::auto(q, p, &adj);
    let temps: Vec<f64> = (0..sched.sweeps).map(|s| sched.temperature(s)).collect();
    let mut out = Vec::with_capacity(p.reads);
    let mut attempts = 0u64;
    for read in 0..p.reads {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(read as u64);
        let mut x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let mut h = fields(q, &adj, &x);
        for &t in &temps {
            for i in 0..n {
                let de = delta(x[i], h[i]);
                if de <= 0.0 || rng.gen::<f64>() < (-de / t).exp() {
                    flip(&mut x, &mut h, &adj, i);
                }
            }
        }
        attempts += (n * temps.len()) as u64;
        if p.quench {
            attempts += descend(&mut x, &mut h, &adj);
        }
        out.push(x);
    }
    let mut ss = SampleSet::from_assignments(q, out);
    ss.info.reads = p.reads;
    ss.info.flip_attempts = attempts;
    ss.info.wall_time = start.elapsed();
    Ok(ss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_linear_terms_give_all_zeros() {
        let mut q = Qubo::new(6);
        for i in 0..6 {
            q.add_linear(i, 1.0 + i as f64);
        }
        let ss = sample_sa(&q, &SamplerParams { reads: 10, ..Default::default() }).unwrap();
        assert_eq!(ss.best().unwrap().bits, vec![0; 6]);
    }

    #[test]
    fn two_bit_hand_example() {
        // 00: 0, 01: −1, 10: −1, 11: 3
        let mut q = Qubo::new(2);
        q.add_linear(0, -1.0);
        q.add_linear(1, -1.0);
        q.add_quadratic(0, 1, 5.0);
        let ss = sample_sa(&q, &SamplerParams { reads: 20, ..Default::default() }).unwrap();
        let best = ss.best().unwrap();
        assert_eq!(best.energy, -1.0);
        assert!(best.bits == vec![0, 1] || best.bits == vec![1, 0]);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut q = Qubo::new(8);
        for i in 0..8 {
            q.add_linear(i, (i as f64) - 3.5);
            for j in i + 1..8 {
                q.add_quadratic(i, j, ((i * 7 + j * 3) % 5) as f64 - 2.0);
            }
        }
        let p = SamplerParams { reads: 15, seed: 42, ..Default::default() };
        let a = sample_sa(&q, &p).unwrap();
        let b = sample_sa(&q, &p).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn schedule_is_geometric() {
        let s = Schedule { t_hi: 100.0, t_lo: 1.0, sweeps: 3 };
        assert_eq!(s.temperature(0), 100.0);
        assert!((s.temperature(1) - 10.0).abs() < 1e-12);
        assert!((s.temperature(2) - 1.0).abs() < 1e-12);
    }
}
