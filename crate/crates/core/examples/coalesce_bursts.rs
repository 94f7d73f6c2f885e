//! Coalesce a bursty error stream and show the resulting persistence
//! durations and per-type summary.

use std::io::Cursor;

use fleet_reliability::coalesce::{coalesce, coalesce_stats, AnalysisParams};
use fleet_reliability::ingest::{parse_error_log, PatternSet};
use fleet_reliability::taxonomy::ErrorTaxonomy;

const LOG: &str = "\
2024-01-01T00:00:00Z node001 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault at 0x7f32aa000000
2024-01-01T00:00:03Z node001 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault at 0x7f32aa000000
2024-01-01T00:00:07Z node001 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault at 0x7f32aa000000
2024-01-01T00:00:30Z node001 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault at 0x7f32aa000000
2024-01-01T00:00:31Z node001 kernel: NVRM: Xid (PCI:0000:27:00): 74, NVLink error on link 3
2024-01-01T00:00:33Z node002 kernel: NVRM: Xid (PCI:0000:07:00): 119, GSP RPC timeout pid=4242
2024-01-01T00:00:34Z node002 kernel: NVRM: Xid (PCI:0000:07:00): 119, GSP RPC timeout pid=4242
";

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();
    let patterns = PatternSet::default_nvidia(&taxonomy);
    let parsed = parse_error_log(Cursor::new(LOG), &patterns, &taxonomy)?;
    println!("{} raw error records", parsed.matched);

    let coalesced = coalesce(&parsed.records, &AnalysisParams { delta_t: 5 })?;
    println!("{} coalesced errors:\n", coalesced.len());
    for c in &coalesced {
        println!(
            "  {} {} {:<10} occurrences={} persistence={}s",
            c.representative.node_id,
            c.representative.gpu_id,
            c.representative.pattern_id,
            c.occurrences,
            c.persistence
        );
    }

    let stats = coalesce_stats(&coalesced);
    println!("\nper-type summary:");
    for (label, s) in &stats.per_type {
        println!(
            "  {label:<12} count={} mean_occurrences={:.2} persistence_p99={}s",
            s.count, s.mean_occurrences, s.persistence_p99
        );
    }
    Ok(())
}
