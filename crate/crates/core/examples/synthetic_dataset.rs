//! Generate a synthetic error log plus job trace and verify the parsers
//! recover exactly what the generator planted.

use std::collections::BTreeMap;
use std::io::Cursor;

use fleet_reliability::ingest::{parse_error_log, parse_job_log, FleetConfig, PatternSet};
use fleet_reliability::synth::{gen_error_log, gen_job_trace, BurstSpec, GenSpec, JobSpec};
use fleet_reliability::taxonomy::ErrorTaxonomy;

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();
    let patterns = PatternSet::default_nvidia(&taxonomy);

    let mut rates = BTreeMap::new();
    rates.insert("xid31".to_string(), 0.02);
    rates.insert("xid74".to_string(), 0.01);
    rates.insert("xid119_120".to_string(), 0.015);
    let spec = GenSpec {
        seed: 42,
        duration_hours: 500.0,
        fleet: FleetConfig {
            fleet_name: "demo".into(),
            node_count: 16,
            gpus_total: 64,
            gb_per_gpu: 96.0,
            observation_hours: 500.0,
            nodes: None,
        },
        per_type_rate: rates,
        burst: Some(BurstSpec {
            burst_prob: 0.3,
            burst_len: (2, 6),
            intra_gap_secs: (1, 4),
        }),
        planted_edges: vec![],
        job_spec: Some(JobSpec::default()),
    };

    let (lines, mut manifest) = gen_error_log(&spec, &taxonomy)?;
    let jobs_csv = gen_job_trace(&spec, &mut manifest, &taxonomy)?;

    println!("sample log lines:");
    for line in lines.iter().take(3) {
        println!("  {line}");
    }

    let errors = parse_error_log(Cursor::new(lines.join("\n")), &patterns, &taxonomy)?;
    let jobs = parse_job_log(Cursor::new(jobs_csv))?;
    println!(
        "\n{} log lines -> {} parsed ({} skipped); {} base events planted",
        manifest.total_log_lines,
        errors.matched,
        errors.skipped,
        manifest.base_events.len()
    );
    println!(
        "{} jobs parsed; ground truth: {} GPU-failed, {} ML",
        jobs.matched,
        manifest.gpu_failed_jobs.len(),
        manifest.ml_jobs.len()
    );
    println!("\nplanted counts by type:");
    for (label, n) in manifest.count_by_label() {
        println!("  {label:<12} {n}");
    }
    Ok(())
}
