//! QBSolv-style decomposition into sub-QUBOs of bounded size.
//!
//! Each pass ranks bits by their impact at the current assignment, packs
//! them into blocks of at most `sub_qubo_limit` bits, and re-optimizes one
//! block at a time with every other bit clamped. A repeat is a full pass
//! that does not improve the energy.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::anneal::{descend, fields};
use super::{SampleSet, SamplerError, SamplerInfo, SamplerParams};
use crate::qubo::Qubo;

/// Sub-QUBO solutions kept per block as extra full-size candidates.
const KEEP_PER_BLOCK: usize = 4;

/// Blocks of at most `limit` bits. Connected components that fit are kept
/// whole; larger ones are cut into chunks by descending impact
/// `|a_i| + Σ_{j: x_j = 1} |Q_ij|`. Blocks come out in order of their
/// highest-impact bit.
pub fn impact_blocks(q: &Qubo, x: &[u8], limit: usize) -> Vec<Vec<usize>> {
    let n = q.n_bits();
    let adj = q.adjacency();
    let mut score: Vec<f64> = q.linear().iter().map(|a| a.abs()).collect();
    for i in 0..n {
        for &(j, v) in &adj[i] {
            if x[j] != 0 {
                score[i] += v.abs();
            }
        }
    }
    let by_score = |a: &usize, b: &usize| score[*b].total_cmp(&score[*a]).then(a.cmp(b));

    // connected components
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for &(j, _) in &adj[i] {
                if comp[j] == usize::MAX {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_by(by_score);
        comps.push(members);
    }
    comps.sort_by(|a, b| by_score(&a[0], &b[0]));

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for members in comps {
        if members.len() > limit {
            for chunk in members.chunks(limit) {
                blocks.push(chunk.to_vec());
            }
        } else {
            if open.len() + members.len() > limit {
                blocks.push(std::mem::take(&mut open));
            }
            open.extend(members);
        }
    }
    if !open.is_empty() {
        blocks.push(open);
    }
    blocks.sort_by(|a, b| by_score(&a[0], &b[0]));
    blocks
}

/// Inner sampler used for each sub-QUBO.
pub type InnerSampler<'a> = dyn FnMut(&Qubo, &SamplerParams) -> Result<SampleSet, SamplerError> + 'a;

/// Decomposed sampling. QUBOs within the size limit go straight to `inner`.
/// `stop` sees the current best assignment after every pass; returning
/// `true` ends the run.
pub fn sample_decomposed(
    q: &Qubo,
    p: &SamplerParams,
    inner: &mut InnerSampler<'_>,
    stop: &mut dyn FnMut(&[u8]) -> bool,
) -> Result<SampleSet, SamplerError> {
    p.validate()?;
    let n = q.n_bits();
    if n <= p.sub_qubo_limit {
        return inner(q, p);
    }
    let start = Instant::now();
    let mut info = SamplerInfo::default();

    let adj = q.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(u64::MAX - 1);
    let mut x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let mut h = fields(q, &adj, &x);
    info.flip_attempts += descend(&mut x, &mut h, &adj);
    let mut energy = q.energy_unchecked(&x);
    let mut pool: Vec<Vec<u8>> = vec![x.clone()];

    let mut idle = 0usize;
    let mut pass = 0usize;
    while pass < p.max_passes.max(1) {
        let blocks = impact_blocks(q, &x, p.sub_qubo_limit);
        let mut improved = false;
        for (b, block) in blocks.iter().enumerate() {
            let sub = q.clamp(block, &x);
            let mut sp = p.clone();
            sp.seed = p
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(((pass as u64) << 32) | b as u64);
            let ss = inner(&sub, &sp)?;
            info.absorb(&ss.info);
            for (k, s) in ss.samples.iter().enumerate() {
                let mut cand = x.clone();
                for (local, &bit) in block.iter().enumerate() {
                    cand[bit] = s.bits[local];
                }
                if k == 0 {
                    let e = q.energy_unchecked(&cand);
                    if e < energy {
                        energy = e;
                        x = cand.clone();
                        improved = true;
                    }
                }
                if k < KEEP_PER_BLOCK {
                    pool.push(cand);
                }
            }
        }
        pass += 1;
        info.pass_energies.push(energy);
        if improved {
            idle = 0;
        } else {
            idle += 1;
            info.repeats += 1;
        }
        if stop(&x) {
            info.early_stopped = true;
            break;
        }
        if idle >= p.repeats {
            break;
        }
    }
    pool.push(x);
    let mut ss = SampleSet::from_assignments(q, pool);
    ss.samples.truncate(p.reads.max(1));
    info.passes = pass;
    info.reads = p.reads;
    info.wall_time = start.elapsed();
    ss.info = info;
    Ok(ss)
}
