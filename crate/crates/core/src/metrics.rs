//! Error counts, derived error inference, MTBE at four granularities,
//! cumulative hazard curves, and availability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coalesce::CoalescedError;
use crate::error::{Error, Result};
use crate::ingest::FleetConfig;
use crate::taxonomy::ErrorTaxonomy;

/// Per-error-type counts and mean time between errors at four granularities.
///
/// MTBE fields are absent (rendered "--") when the count is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MtbeReport {
    pub error_type: String,
    pub count: u64,
    pub observation_hours: f64,
    pub mtbe_system: Option<f64>,
    pub mtbe_per_node: Option<f64>,
    pub mtbe_per_gpu: Option<f64>,
    pub mtbe_per_gb: Option<f64>,
}

/// Count coalesced errors by taxonomy label, optionally restricted to a
/// time range. Excluded XIDs are omitted unless `include_excluded` is set.
pub fn count_errors(
    coalesced: &[CoalescedError],
    taxonomy: &ErrorTaxonomy,
    time_range: Option<(i64, i64)>,
    include_excluded: bool,
) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for c in coalesced {
        if let Some((lo, hi)) = time_range {
            if c.start < lo || c.start > hi {
                continue;
            }
        }
        let label = c
            .representative
            .xid
            .and_then(|x| taxonomy.label_for_xid(x))
            .unwrap_or(c.representative.pattern_id.as_str());
        if !include_excluded && taxonomy.is_excluded(label) {
            continue;
        }
        *counts.entry(label.to_string()).or_insert(0) += 1;
    }
    counts
}

/// Uncorrectable ECC memory errors are the mutually exclusive outcomes of
/// row-remapping recovery: events plus failures.
pub fn infer_uncorrectable(rre_count: u64, rrf_count: u64) -> u64 {
    rre_count + rrf_count
}

/// Consecutive SBEs are the uncorrectable errors not explained by DBEs.
pub fn infer_consecutive_sbe(uncorrectable: u64, dbe: u64) -> Result<u64> {
    if dbe > uncorrectable {
        return Err(Error::data(format!(
            "DBE count {dbe} exceeds uncorrectable count {uncorrectable}"
        )));
    }
    Ok(uncorrectable - dbe)
}

/// MTBE normalization chain:
/// system = observation_hours / count, per-node = system x node_count,
/// per-GPU = per-node x (fleet-average GPUs per node), per-GB = per-GPU x GB.
pub fn mtbe(error_type: &str, count: u64, fleet: &FleetConfig) -> Result<MtbeReport> {
    fleet.validate()?;
    let (mtbe_system, mtbe_per_node, mtbe_per_gpu, mtbe_per_gb) = if count == 0 {
        (None, None, None, None)
    } else {
        let system = fleet.observation_hours / count as f64;
        let per_node = system * f64::from(fleet.node_count);
        let per_gpu = per_node * fleet.gpus_per_node();
        let per_gb = per_gpu * fleet.gb_per_gpu;
        (Some(system), Some(per_node), Some(per_gpu), Some(per_gb))
    };
    Ok(MtbeReport {
        error_type: error_type.to_string(),
        count,
        observation_hours: fleet.observation_hours,
        mtbe_system,
        mtbe_per_node,
        mtbe_per_gpu,
        mtbe_per_gb,
    })
}

/// One step of a cumulative hazard curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardStep {
    pub time: f64,
    pub cumulative_hazard: f64,
    pub events: u64,
    pub at_risk: u64,
}

/// Step-function estimate of the cumulative hazard H(t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardCurve {
    pub steps: Vec<HazardStep>,
}

impl HazardCurve {
    /// H(t): value of the step function at time `t`; 0 before the first event.
    pub fn hazard_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|s| s.time <= t)
            .last()
            .map(|s| s.cumulative_hazard)
            .unwrap_or(0.0)
    }
}

/// Nelson-Aalen estimator: H(t) = sum over event times t_i <= t of d_i/n_i,
/// where d_i is the number of events at t_i and n_i the at-risk count.
pub fn nelson_aalen(
    failure_times: &[f64],
    at_risk: impl Fn(f64) -> u64,
) -> Result<HazardCurve> {
    if failure_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::data("failure times must be sorted"));
    }
    let mut steps = Vec::new();
    let mut cumulative = 0.0f64;
    let mut i = 0usize;
    while i < failure_times.len() {
        let t = failure_times[i];
        let mut d = 0u64;
        while i < failure_times.len() && failure_times[i] == t {
            d += 1;
            i += 1;
        }
        let n = at_risk(t);
        if n == 0 {
            return Err(Error::data(format!("at-risk count is zero at t={t}")));
        }
        cumulative += d as f64 / n as f64;
        steps.push(HazardStep {
            time: t,
            cumulative_hazard: cumulative,
            events: d,
            at_risk: n,
        });
    }
    Ok(HazardCurve { steps })
}

/// MTTF/MTTR pair for node availability.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AvailabilityInput {
    pub mttf: f64,
    pub mttr: f64,
}

/// Steady-state availability MTTF / (MTTF + MTTR).
pub fn availability(input: AvailabilityInput) -> Result<f64> {
    if input.mttf <= 0.0 || input.mttr <= 0.0 {
        return Err(Error::config("mttf and mttr must be positive"));
    }
    Ok(input.mttf / (input.mttf + input.mttr))
}
