//! Slot-level discrete-event simulation of the contention procedure.
//!
//! Time advances slot by slot inside each phase of a repeating superframe
//! (EAP1 then RAP1). Every node keeps its own backoff stage, window and
//! counter; counters freeze during exchanges, outside permitted phases and
//! when the rest of the phase cannot hold a full successful exchange. A slot
//! in which two or more counters reach zero is a collision; a lone
//! transmission fails with the packet error rate.

mod engine;
mod stats;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub use engine::{run_simulation, run_simulation_traced, MIN_SUPERFRAMES, WARMUP_SUPERFRAMES};
pub use stats::{AuditCounters, ChannelTime, SimStats, UpCounters};

use crate::error::{Error, Result};
use crate::metrics::UpMetrics;
use crate::model;
use crate::params::{Scenario, NUM_UPS};

/// Seed of replication `r` derived from a master seed.
pub fn replication_seed(master: u64, r: u32) -> u64 {
    master ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `replications` independent simulations, up to `parallel` at a time
/// (0 means one per available core). Results are in replication order.
pub fn run_replications(
    scenario: &Scenario,
    seed: u64,
    horizon: f64,
    replications: u32,
    parallel: usize,
) -> Result<Vec<SimStats>> {
    if replications == 0 {
        return Err(Error::validation("replications must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    pool.install(|| replicate(scenario, seed, horizon, replications))
}

/// Replications on the current rayon pool.
pub(crate) fn replicate(scenario: &Scenario, seed: u64, horizon: f64, replications: u32) -> Result<Vec<SimStats>> {
    (0..replications)
        .into_par_iter()
        .map(|r| run_simulation(scenario, replication_seed(seed, r), horizon))
        .collect()
}

/// Per-priority metrics of one replication. A metric is `None` for an absent
/// priority or when no frame of that priority resolved.
pub fn sim_metrics(stats: &SimStats, scenario: &Scenario) -> [UpMetrics; NUM_UPS] {
    let payload_airtime = model::payload_duration(&scenario.phy, scenario.payload_bytes);
    let state_time = if stats.channel.idle_slots + stats.channel.exchanges > 0.0 {
        Some(stats.channel.idle_slots + stats.channel.exchanges)
    } else {
        None
    };
    std::array::from_fn(|i| {
        let c = &stats.ups[i];
        let mut m = UpMetrics { priority: i, ..UpMetrics::default() };
        if scenario.node_counts[i] == 0 {
            return m;
        }
        let resolved = c.resolved() as f64;
        if resolved > 0.0 {
            m.reliability = Some(c.successes as f64 / resolved);
            m.delay = Some(c.total_access_delay / resolved);
        }
        if stats.simulated_time > 0.0 {
            m.throughput = Some(c.successes as f64 * payload_airtime / stats.simulated_time);
        }
        if c.node_states > 0 {
            let e = c.energy_total() / c.node_states as f64;
            m.energy = Some(e);
            if let Some(total) = state_time {
                let states = stats.channel_states as f64;
                m.energy_rate = Some(e / (total / states));
            }
        }
        m
    })
}

/// Mean and 95% confidence half-width of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            f64::INFINITY
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(1.96);
            t * (var / n as f64).sqrt()
        };
        Some(Self { mean, half_width, samples: n })
    }
}

/// Replication estimates of one priority's metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpEstimates {
    pub priority: usize,
    pub reliability: Option<Estimate>,
    pub throughput: Option<Estimate>,
    pub energy: Option<Estimate>,
    pub energy_rate: Option<Estimate>,
    pub delay: Option<Estimate>,
}

/// Combines replications into per-priority estimates. Replications where a
/// metric is undefined are left out of that metric's estimate.
pub fn summarize(runs: &[SimStats], scenario: &Scenario) -> [UpEstimates; NUM_UPS] {
    let per_run: Vec<_> = runs.iter().map(|s| sim_metrics(s, scenario)).collect();
    std::array::from_fn(|i| {
        let pick = |f: fn(&UpMetrics) -> Option<f64>| {
            let xs: Vec<f64> = per_run.iter().filter_map(|m| f(&m[i])).collect();
            Estimate::from_samples(&xs)
        };
        UpEstimates {
            priority: i,
            reliability: pick(|m| m.reliability),
            throughput: pick(|m| m.throughput),
            energy: pick(|m| m.energy),
            energy_rate: pick(|m| m.energy_rate),
            delay: pick(|m| m.delay),
        }
    })
}
