//! Samplers for [`Qubo`] problems.
//!
//! All samplers return a [`SampleSet`]: distinct assignments sorted by
//! energy (ties broken lexicographically on the bits) with occurrence
//! counts. Energies are always recomputed from the QUBO coefficients, so
//! they match [`Qubo::energy`] exactly.

mod anneal;
mod decomposed;
mod exact;
mod mock;

pub use anneal::{sample_sa, Schedule};
pub use decomposed::{impact_blocks, sample_decomposed};
pub use exact::{sample_exact, MAX_EXACT_BITS};
pub use mock::{sample_mock_annealer, MockDevice};

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubo::Qubo;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("exhaustive sampling is limited to {limit} bits, got {got}")]
    TooManyBits { limit: usize, got: usize },
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerParams {
    /// Independent anneals per call.
    pub reads: usize,
    /// Improvement-free passes before the decomposed sampler stops.
    pub repeats: usize,
    pub sub_qubo_limit: usize,
    /// Sweeps per read; `None` means ten per bit.
    pub sweeps: Option<usize>,
    /// Upper limit on the self-scaled sweep count.
    pub max_sweeps: Option<usize>,
    pub t_hi: Option<f64>,
    pub t_lo: Option<f64>,
    /// Finish every read with a zero-temperature descent.
    pub quench: bool,
    /// Safety limit on decomposed passes.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            reads: 100,
            repeats: 10,
            sub_qubo_limit: 160,
            sweeps: None,
            max_sweeps: None,
            t_hi: None,
            t_lo: None,
            quench: true,
            max_passes: 200,
            seed: 0,
        }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.reads == 0 {
            return Err(SamplerError::InvalidParams("reads must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(SamplerError::InvalidParams("repeats must be at least 1".into()));
        }
        if self.sub_qubo_limit < 8 {
            return Err(SamplerError::InvalidParams("sub_qubo_limit must be at least 8".into()));
        }
        if self.sweeps == Some(0) {
            return Err(SamplerError::InvalidParams("sweeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sweeps_for(&self, n: usize) -> usize {
        let s = self.sweeps.unwrap_or(10 * n.max(1));
        self.max_sweeps.map_or(s, |m| s.min(m)).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerInfo {
    pub reads: usize,
    /// Improvement-free passes (decomposed sampler).
    pub repeats: usize,
    pub passes: usize,
    /// Best energy after each decomposed pass.
    pub pass_energies: Vec<f64>,
    pub early_stopped: bool,
    /// Single-bit Metropolis proposals, summed over all anneals.
    pub flip_attempts: u64,
    pub wall_time: Duration,
    /// Synthetic device time (mock annealer only).
    pub device_time: Duration,
    pub tasks: usize,
}

impl SamplerInfo {
    fn absorb(&mut self, other: &SamplerInfo) {
        self.flip_attempts += other.flip_attempts;
        self.device_time += other.device_time;
        self.tasks += other.tasks;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub info: SamplerInfo,
}

impl SampleSet {
    /// Deduplicates, recomputes energies and sorts.
    pub fn from_assignments<I>(q: &Qubo, assignments: I) -> Self
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for a in assignments {
            *counts.entry(a).or_insert(0) += 1;
        }
        let mut samples: Vec<Sample> = counts
            .into_iter()
            .map(|(bits, count)| Sample {
                energy: q.energy_unchecked(&bits),
                bits,
                count,
            })
            .collect();
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));
        Self {
            samples,
            info: SamplerInfo::default(),
        }
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sets_are_sorted_and_deduplicated() {
        let mut q = Qubo::new(2);
        q.add_linear(0, -1.0);
        q.add_linear(1, -1.0);
        let ss = SampleSet::from_assignments(&q, vec![vec![1, 0], vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(ss.len(), 3);
        assert_eq!(ss.samples[0].bits, vec![0, 1]);
        assert_eq!(ss.samples[1].bits, vec![1, 0]);
        assert_eq!(ss.samples[1].count, 2);
        assert_eq!(ss.samples[2].energy, 0.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(SamplerParams::default().validate().is_ok());
        let bad = SamplerParams {
            sub_qubo_limit: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SamplerParams {
            reads: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
