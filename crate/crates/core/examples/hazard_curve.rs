//! Cumulative hazard (Nelson-Aalen) of first NVLink errors across GPUs,
//! estimated from synthetic per-GPU first-failure ages.

use std::collections::BTreeMap;
use std::io::Cursor;

use fleet_reliability::ingest::{parse_error_log, FleetConfig, PatternSet};
use fleet_reliability::metrics::nelson_aalen;
use fleet_reliability::synth::{gen_error_log, GenSpec, EPOCH_BASE};
use fleet_reliability::taxonomy::ErrorTaxonomy;

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();
    let patterns = PatternSet::default_nvidia(&taxonomy);
    let fleet = FleetConfig {
        fleet_name: "demo".into(),
        node_count: 32,
        gpus_total: 128,
        gb_per_gpu: 96.0,
        observation_hours: 2000.0,
        nodes: None,
    };
    let mut rates = BTreeMap::new();
    rates.insert("xid74".to_string(), 0.005);
    let spec = GenSpec {
        seed: 3,
        duration_hours: 2000.0,
        fleet: fleet.clone(),
        per_type_rate: rates,
        burst: None,
        planted_edges: vec![],
        job_spec: None,
    };
    let (lines, _) = gen_error_log(&spec, &taxonomy)?;
    let parsed = parse_error_log(Cursor::new(lines.join("\n")), &patterns, &taxonomy)?;

    // Age (hours since observation start) of each GPU's first error.
    let mut first_error: BTreeMap<(String, String), i64> = BTreeMap::new();
    for e in &parsed.records {
        first_error
            .entry((e.node_id.clone(), e.gpu_id.clone()))
            .or_insert(e.timestamp);
    }
    let mut ages: Vec<f64> = first_error
        .values()
        .map(|t| (t - EPOCH_BASE) as f64 / 3600.0)
        .collect();
    ages.sort_by(|a, b| a.total_cmp(b));

    // GPUs that never erred stay at risk for the whole window.
    let total_gpus = u64::from(fleet.gpus_total);
    let at_risk = |t: f64| total_gpus - ages.iter().filter(|&&a| a < t).count() as u64;
    let curve = nelson_aalen(&ages, at_risk)?;

    println!("{} GPUs saw an NVLink error; cumulative hazard:", ages.len());
    for s in curve.steps.iter().step_by(curve.steps.len().div_ceil(12).max(1)) {
        println!(
            "  t={:>7.1}h  H={:.4}  (events {} / at risk {})",
            s.time, s.cumulative_hazard, s.events, s.at_risk
        );
    }
    Ok(())
}
