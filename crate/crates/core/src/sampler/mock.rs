//! Stand-in for a remote annealing service.
//!
//! Bit outcomes come from [`sample_sa`]; every submitted task waits out a
//! configurable queue latency and is billed a fixed synthetic device time,
//! so the timing and accounting paths of a remote sampler can be exercised
//! without hardware.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{sample_decomposed, sample_sa, SampleSet, SamplerError, SamplerParams};
use crate::qubo::Qubo;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockDevice {
    #[serde(with = "millis")]
    pub queue_latency: Duration,
    #[serde(with = "millis")]
    pub device_time_per_task: Duration,
    /// Largest QUBO accepted as a single task.
    pub capacity: usize,
}

impl Default for MockDevice {
    fn default() -> Self {
        Self {
            queue_latency: Duration::ZERO,
            device_time_per_task: Duration::from_millis(20),
            capacity: 160,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        if !(ms >= 0.0) || !ms.is_finite() {
            return Err(serde::de::Error::custom("milliseconds must be finite and non-negative"));
        }
        Ok(Duration::from_secs_f64(ms / 1e3))
    }
}

fn submit(dev: &MockDevice, q: &Qubo, p: &SamplerParams) -> Result<SampleSet, SamplerError> {
    if !dev.queue_latency.is_zero() {
        std::thread::sleep(dev.queue_latency);
    }
    let mut ss = sample_sa(q, p)?;
    ss.info.tasks = 1;
    ss.info.device_time = dev.device_time_per_task;
    Ok(ss)
}

/// One task when the QUBO fits the device, otherwise decomposition with one
/// task per sub-QUBO.
pub fn sample_mock_annealer(
    q: &Qubo,
    p: &SamplerParams,
    dev: &MockDevice,
    stop: &mut dyn FnMut(&[u8]) -> bool,
) -> Result<SampleSet, SamplerError> {
    let start = Instant::now();
    let mut ss = if q.n_bits() <= dev.capacity {
        submit(dev, q, p)?
    } else {
        let mut sp = p.clone();
        sp.sub_qubo_limit = sp.sub_qubo_limit.min(dev.capacity);
        let mut inner = |sub: &Qubo, ip: &SamplerParams| submit(dev, sub, ip);
        sample_decomposed(q, &sp, &mut inner, stop)?
    };
    ss.info.wall_time = start.elapsed();
    Ok(ss)
}
