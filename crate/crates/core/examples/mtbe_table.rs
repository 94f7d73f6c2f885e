//! Build the resilience-statistics table (error counts and MTBE at
//! system/node/GPU/GB granularity) for an observed count vector.

use std::collections::BTreeMap;

use fleet_reliability::ingest::FleetConfig;
use fleet_reliability::report::{mtbe_reports, resilience_table_csv};
use fleet_reliability::taxonomy::ErrorTaxonomy;

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();

    // Observed coalesced-error counts over the observation period.
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    counts.insert("xid31".into(), 312);
    counts.insert("xid48".into(), 17);
    counts.insert("xid63".into(), 16);
    counts.insert("xid64".into(), 8);
    counts.insert("xid74".into(), 45);
    counts.insert("xid79".into(), 12);
    counts.insert("xid119_120".into(), 201);

    for fleet in [FleetConfig::a100(), FleetConfig::h100()] {
        let reports = mtbe_reports(&counts, &taxonomy, &fleet)?;
        println!("# fleet {} ({} nodes, {} GPUs)", fleet.fleet_name, fleet.node_count, fleet.gpus_total);
        print!("{}", resilience_table_csv(&reports, &taxonomy, &fleet));
        println!();
    }
    Ok(())
}
