//! Exhaustive enumeration, used as a test oracle.

use std::time::Instant;

use super::anneal::{fields, flip};
use super::{SampleSet, SamplerError};
use crate::qubo::Qubo;

pub const MAX_EXACT_BITS: usize = 24;

/// Keeps at most this many tied minima.
const MAX_TIES: usize = 4096;

/// Walks all `2^n` assignments in Gray-code order and returns every global
/// minimum.
pub fn sample_exact(q: &Qubo) -> Result<SampleSet, SamplerError> {
    let n = q.n_bits();
    if n > MAX_EXACT_BITS {
        return Err(SamplerError::TooManyBits {
            limit: MAX_EXACT_BITS,
            got: n,
        });
    }
    let start = Instant::now();
    let adj = q.adjacency();
    let mut x = vec![0u8; n];
    let mut h = fields(q, &adj, &x);
    let mut e = q.constant();
    let scale = q.constant().abs()
        + q.linear().iter().map(|a| a.abs()).sum::<f64>()
        + q.quadratic().values().map(|v| v.abs()).sum::<f64>();
    // Incremental energies drift; keep anything close and settle with exact
    // recomputation at the end.
    let slack = 1e-9 * (1.0 + scale);
    let mut best = e;
    let mut keep: Vec<Vec<u8>> = vec![x.clone()];
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        e += if x[i] == 0 { h[i] } else { -h[i] };
        flip(&mut x, &mut h, &adj, i);
        if e < best - slack {
            best = e;
            keep.clear();
            keep.push(x.clone());
        } else if e <= best + slack {
            best = best.min(e);
            if keep.len() < MAX_TIES {
                keep.push(x.clone());
            }
        }
    }
    let exact: Vec<(f64, Vec<u8>)> = keep.into_iter().map(|b| (q.energy_unchecked(&b), b)).collect();
    let min = exact.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * (1.0 + min.abs());
    let mut ss = SampleSet::from_assignments(q, exact.into_iter().filter(|(e, _)| *e <= min + tie).map(|(_, b)| b));
    ss.info.reads = 1;
    ss.info.wall_time = start.elapsed();
    Ok(ss)
}

/// Plain double loop over all assignments; independent of the Gray-code walk.
#[cfg(test)]
pub(crate) fn brute_force_min(q: &Qubo) -> f64 {
    let n = q.n_bits();
    (0u64..(1u64 << n))
        .map(|m| {
            let bits: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
            q.energy(&bits).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_bit() {
        let mut q = Qubo::new(1);
        q.add_linear(0, 1.0);
        let ss = sample_exact(&q).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss.samples[0].bits, vec![0]);
    }

    #[test]
    fn one_hot_penalty_has_two_minima() {
        // (y1 + y2 − 1)² = −y1 − y2 + 2 y1 y2 + 1
        let mut q = Qubo::new(2);
        q.add_constant(1.0);
        q.add_linear(0, -1.0);
        q.add_linear(1, -1.0);
        q.add_quadratic(0, 1, 2.0);
        let ss = sample_exact(&q).unwrap();
        let bits: Vec<Vec<u8>> = ss.samples.iter().map(|s| s.bits.clone()).collect();
        assert_eq!(bits, vec![vec![0, 1], vec![1, 0]]);
        assert!(ss.samples.iter().all(|s| s.energy == 0.0));
    }

    #[test]
    fn too_many_bits() {
        assert!(matches!(
            sample_exact(&Qubo::new(25)),
            Err(SamplerError::TooManyBits { .. })
        ));
    }

    #[test]
    fn gray_walk_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let n = rng.gen_range(1..11);
            let mut q = Qubo::new(n);
            for i in 0..n {
                q.add_linear(i, rng.gen_range(-4..5) as f64);
                for j in i + 1..n {
                    q.add_quadratic(i, j, rng.gen_range(-4..5) as f64);
                }
            }
            let ss = sample_exact(&q).unwrap();
            assert_eq!(ss.best().unwrap().energy, brute_force_min(&q));
            for s in &ss.samples {
                assert_eq!(s.energy, brute_force_min(&q));
            }
        }
    }
}
