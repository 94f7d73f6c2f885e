//! Mine error-propagation edges from a synthetic dataset with a planted
//! source -> target pair and emit the graph as DOT.

use std::collections::BTreeMap;
use std::io::Cursor;

use fleet_reliability::coalesce::{coalesce, AnalysisParams};
use fleet_reliability::ingest::{parse_error_log, FleetConfig, PatternSet};
use fleet_reliability::propagation::{build_edges, emit_graph, GraphFormat, Scope};
use fleet_reliability::synth::{gen_error_log, GenSpec, PlantedEdge};
use fleet_reliability::taxonomy::ErrorTaxonomy;

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();
    let patterns = PatternSet::default_nvidia(&taxonomy);

    let mut rates = BTreeMap::new();
    rates.insert("xid79".to_string(), 0.05);
    rates.insert("xid74".to_string(), 0.02);
    let spec = GenSpec {
        seed: 7,
        duration_hours: 1000.0,
        fleet: FleetConfig {
            fleet_name: "demo".into(),
            node_count: 20,
            gpus_total: 80,
            gb_per_gpu: 96.0,
            observation_hours: 1000.0,
            nodes: None,
        },
        per_type_rate: rates,
        burst: None,
        planted_edges: vec![PlantedEdge {
            source: "xid79".into(),
            target: "xid63".into(),
            probability: 0.6,
            gap_secs: 2,
        }],
        job_spec: None,
    };

    let (lines, _) = gen_error_log(&spec, &taxonomy)?;
    let parsed = parse_error_log(Cursor::new(lines.join("\n")), &patterns, &taxonomy)?;
    let coalesced = coalesce(&parsed.records, &AnalysisParams::default())?;
    let (edges, terminals) = build_edges(
        &coalesced,
        &AnalysisParams::default(),
        Scope::IntraGpu,
        &taxonomy,
    )?;

    println!("edges (planted xid79 -> xid63 at p=0.6):");
    for e in &edges {
        println!(
            "  {} -> {}  p={:.3} n={} mean_gap={:.1}s",
            e.source_type, e.target_type, e.probability, e.count, e.mean_propagation_time
        );
    }
    println!("\n{}", emit_graph(&edges, &terminals, GraphFormat::Dot)?);
    Ok(())
}
