//! Discrete-event simulation of gang-scheduled jobs on failing nodes:
//! achieved availability and minimum spare overprovisioning.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulation parameterization.
///
/// Failure granularity is the node: errors requiring a reset drain whole
/// nodes, so spare capacity is consumed and restored in units of
/// `gpus_per_node` GPUs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// GPUs the gang-scheduled job needs simultaneously (e.g. 608).
    pub job_gpus: u32,
    pub gpus_per_node: u32,
    /// Job duration (horizon) in hours.
    pub duration_hours: f64,
    /// Per-node mean time between failures, hours.
    pub node_mtbf_hours: f64,
    /// Time from node failure until it can serve again (drain, reboot,
    /// checkpoint reload are folded in), hours.
    pub recovery_time_hours: f64,
    /// Spare GPUs beyond the job allocation; effective in whole nodes.
    pub spare_gpus: u32,
    pub seed: u64,
    pub replications: u32,
    /// Time quantum of the discrete-time event loop, hours.
    #[serde(default = "default_time_step")]
    pub time_step_hours: f64,
}

fn default_time_step() -> f64 {
    0.5
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.job_gpus == 0 || self.gpus_per_node == 0 {
            return Err(Error::config("job_gpus and gpus_per_node must be positive"));
        }
        if self.duration_hours <= 0.0
            || self.node_mtbf_hours <= 0.0
            || self.recovery_time_hours <= 0.0
            || self.time_step_hours <= 0.0
        {
            return Err(Error::config(
                "duration, mtbf, recovery time, and time step must be positive",
            ));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be positive"));
        }
        Ok(())
    }

    /// Nodes the job occupies (GPU demand rounded up to whole nodes).
    pub fn required_nodes(&self) -> u32 {
        self.job_gpus.div_ceil(self.gpus_per_node)
    }

    pub fn spare_nodes(&self) -> u32 {
        self.spare_gpus / self.gpus_per_node
    }
}

/// Outcome of a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    /// Mean over replications of job-uptime hours / duration.
    pub achieved_availability: f64,
    pub total_stall_hours: f64,
    pub failure_count: u64,
    pub per_replication_availability: Vec<f64>,
    /// 95% confidence half-width of the availability mean.
    pub confidence_half_width: f64,
    pub seed: u64,
}

fn replication_seed(master: u64, replication: u32) -> u64 {
    // splitmix64 over (master, index) for independent sub-streams.
    let mut z = master
        .wrapping_add(u64::from(replication).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct ReplicationOutcome {
    availability: f64,
    stall_hours: f64,
    failures: u64,
}

fn run_replication(cfg: &SimConfig, seed: u64) -> ReplicationOutcome {
    let required = u64::from(cfg.required_nodes());
    let total = required + u64::from(cfg.spare_nodes());
    let dt = cfg.time_step_hours;
    let steps = (cfg.duration_hours / dt).ceil() as u64;
    let recovery_steps = ((cfg.recovery_time_hours / dt).ceil() as u64).max(1);
    // Per-step failure probability of an active node (discretized
    // exponential inter-arrival with mean node_mtbf).
    let p_fail = 1.0 - (-dt / cfg.node_mtbf_hours).exp();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Recovery completions are FIFO because the recovery time is constant.
    let mut recovering: VecDeque<u64> = VecDeque::new();
    let mut stall_steps = 0u64;
    let mut failures = 0u64;

    for step in 0..steps {
        while recovering.front().is_some_and(|&f| f <= step) {
            recovering.pop_front();
        }
        let available = total - recovering.len() as u64;
        let active = available.min(required);
        if active < required {
            stall_steps += 1;
        }
        if active > 0 && p_fail > 0.0 {
            let failed = Binomial::new(active, p_fail)
                .expect("valid binomial parameters")
                .sample(&mut rng);
            failures += failed;
            for _ in 0..failed {
                recovering.push_back(step + 1 + recovery_steps);
            }
        }
    }

    let stall_hours = stall_steps as f64 * dt;
    let horizon = steps as f64 * dt;
    ReplicationOutcome {
        availability: 1.0 - stall_hours / horizon,
        stall_hours,
        failures,
    }
}

/// Run the simulation. Deterministic under (seed, replications).
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut availabilities = Vec::with_capacity(cfg.replications as usize);
    let mut stall_hours = 0.0;
    let mut failures = 0u64;
    for r in 0..cfg.replications {
        let outcome = run_replication(cfg, replication_seed(cfg.seed, r));
        availabilities.push(outcome.availability);
        stall_hours += outcome.stall_hours;
        failures += outcome.failures;
    }
    let n = availabilities.len() as f64;
    let mean = availabilities.iter().sum::<f64>() / n;
    let half_width = if availabilities.len() > 1 {
        let var = availabilities
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SimResult {
        achieved_availability: mean,
        total_stall_hours: stall_hours,
        failure_count: failures,
        per_replication_availability: availabilities,
        confidence_half_width: half_width,
        seed: cfg.seed,
    })
}

/// Minimum spare capacity meeting an availability target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverprovisionResult {
    pub spare_gpus: u32,
    pub spare_nodes: u32,
    /// spare_gpus / job_gpus.
    pub fraction: f64,
    pub achieved_availability: f64,
}

/// Smallest spare count (in whole nodes) whose mean achieved availability
/// reaches the target. Availability is non-decreasing in spares, so a
/// linear first-crossing search suffices.
pub fn required_overprovision(cfg: &SimConfig, target: f64) -> Result<OverprovisionResult> {
    if !(0.0..1.0).contains(&target) || target <= 0.0 {
        return Err(Error::config("target availability must be in (0,1)"));
    }
    cfg.validate()?;
    let max_spare_nodes = cfg.required_nodes();
    for spare_nodes in 0..=max_spare_nodes {
        let mut candidate = cfg.clone();
        candidate.spare_gpus = spare_nodes * cfg.gpus_per_node;
        let result = run(&candidate)?;
        if result.achieved_availability >= target {
            return Ok(OverprovisionResult {
                spare_gpus: candidate.spare_gpus,
                spare_nodes,
                fraction: f64::from(candidate.spare_gpus) / f64::from(cfg.job_gpus),
                achieved_availability: result.achieved_availability,
            });
        }
    }
    Err(Error::data(format!(
        "target availability {target} unreachable even with spares equal to the job size"
    )))
}

/// One row of a recovery-time sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub recovery_time_hours: f64,
    pub spare_gpus: u32,
    pub overprovision_fraction: f64,
    pub achieved_availability: f64,
}

/// Required overprovisioning across recovery times. Deterministic under seed.
pub fn sweep_recovery_time(
    cfg: &SimConfig,
    times: &[f64],
    target: f64,
) -> Result<Vec<SweepRow>> {
    if times.is_empty() || times.iter().any(|t| *t <= 0.0) {
        return Err(Error::config("recovery times must be non-empty and positive"));
    }
    times
        .iter()
        .map(|&t| {
            let mut candidate = cfg.clone();
            candidate.recovery_time_hours = t;
            let r = required_overprovision(&candidate, target)?;
            Ok(SweepRow {
                recovery_time_hours: t,
                spare_gpus: r.spare_gpus,
                overprovision_fraction: r.fraction,
                achieved_availability: r.achieved_availability,
            })
        })
        .collect()
}
