//! Attribute job failures to GPU errors on allocated nodes and print the
//! per-type failure-probability and job-size tables.

use std::collections::BTreeMap;
use std::io::Cursor;

use fleet_reliability::ingest::{
    classify_ml, default_ml_keywords, parse_error_log, parse_job_log, FleetConfig, PatternSet,
};
use fleet_reliability::jobimpact::{attribute, failure_probability_per_xid, job_size_stats, AttributionParams};
use fleet_reliability::report::{job_failure_table_csv, job_size_table_csv};
use fleet_reliability::synth::{gen_error_log, gen_job_trace, GenSpec, JobSpec};
use fleet_reliability::taxonomy::ErrorTaxonomy;

fn main() -> fleet_reliability::Result<()> {
    let taxonomy = ErrorTaxonomy::default_table();
    let patterns = PatternSet::default_nvidia(&taxonomy);

    let mut rates = BTreeMap::new();
    rates.insert("xid74".to_string(), 0.02);
    rates.insert("xid48".to_string(), 0.005);
    let spec = GenSpec {
        seed: 11,
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
        burst: None,
        planted_edges: vec![],
        job_spec: Some(JobSpec::default()),
    };

    let (lines, mut manifest) = gen_error_log(&spec, &taxonomy)?;
    let jobs_csv = gen_job_trace(&spec, &mut manifest, &taxonomy)?;
    let errors = parse_error_log(Cursor::new(lines.join("\n")), &patterns, &taxonomy)?;
    let jobs = parse_job_log(Cursor::new(jobs_csv))?;

    let attributed = attribute(&jobs.records, &errors.records, &AttributionParams::default())?;
    println!(
        "{} of {} jobs attributed to GPU errors (ground truth: {})\n",
        attributed.len(),
        jobs.records.len(),
        manifest.gpu_failed_jobs.len()
    );

    let rows = failure_probability_per_xid(&jobs.records, &errors.records, &attributed, &taxonomy);
    println!("failure probability per error type:");
    print!("{}", job_failure_table_csv(&rows));

    let keywords = default_ml_keywords();
    let sizes = job_size_stats(&jobs.records, |j| classify_ml(j, &keywords));
    println!("\njob sizes:");
    print!("{}", job_size_table_csv(&sizes));
    Ok(())
}
