//! Report composition: resilience-statistics, job-failure, and job-size
//! tables as CSV, plus propagation graphs, written into one directory.

use std::collections::BTreeMap;
use std::path::Path;

use crate::coalesce::CoalescedError;
use crate::error::Result;
use crate::ingest::{ErrorRecord, FleetConfig, JobRecord};
use crate::jobimpact::{GpuFailedJob, JobSizeRow, XidFailureRow};
use crate::metrics::{infer_consecutive_sbe, infer_uncorrectable, mtbe, MtbeReport};
use crate::propagation::{emit_graph, GraphFormat, PropagationEdge, TerminalMark};
use crate::taxonomy::ErrorTaxonomy;

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.2}"),
        None => "--".to_string(),
    }
}

/// Counts extended with the inferred memory-error rows.
pub fn counts_with_inferred(
    counts: &BTreeMap<String, u64>,
) -> Result<BTreeMap<String, u64>> {
    let mut out = counts.clone();
    let rre = counts.get("xid63").copied().unwrap_or(0);
    let rrf = counts.get("xid64").copied().unwrap_or(0);
    let dbe = counts.get("xid48").copied().unwrap_or(0);
    let uncorrectable = infer_uncorrectable(rre, rrf);
    out.insert("uncorrectable_ecc".to_string(), uncorrectable);
    out.insert(
        "consecutive_sbe".to_string(),
        infer_consecutive_sbe(uncorrectable, dbe)?,
    );
    Ok(out)
}

/// Per-type MTBE reports for every taxonomy row, including inferred ones.
pub fn mtbe_reports(
    counts: &BTreeMap<String, u64>,
    taxonomy: &ErrorTaxonomy,
    fleet: &FleetConfig,
) -> Result<Vec<MtbeReport>> {
    let full = counts_with_inferred(counts)?;
    let mut reports = Vec::new();
    for entry in taxonomy.entries() {
        if entry.excluded_by_default {
            continue;
        }
        let count = full.get(&entry.label).copied().unwrap_or(0);
        reports.push(mtbe(&entry.label, count, fleet)?);
    }
    Ok(reports)
}

/// Resilience-statistics table (event, category, counts, MTBE columns).
pub fn resilience_table_csv(
    reports: &[MtbeReport],
    taxonomy: &ErrorTaxonomy,
    fleet: &FleetConfig,
) -> String {
    let mut csv = String::from(
        "event,abbr,category,count,mtbe_system_hours,mtbe_per_node_hours,mtbe_per_gpu_hours,mtbe_per_gb_hours,fleet\n",
    );
    for r in reports {
        let entry = taxonomy.get(&r.error_type);
        let (abbr, category) = entry
            .map(|e| (e.abbr.clone(), e.category.to_string()))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.error_type,
            abbr,
            category,
            r.count,
            fmt_opt(r.mtbe_system),
            fmt_opt(r.mtbe_per_node),
            fmt_opt(r.mtbe_per_gpu),
            fmt_opt(r.mtbe_per_gb),
            fleet.fleet_name,
        ));
    }
    csv
}

/// Job-failure-probability table.
pub fn job_failure_table_csv(rows: &[XidFailureRow]) -> String {
    let mut csv =
        String::from("error_type,gpu_failed_jobs,encountering_jobs,failure_probability_pct\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.error_type,
            r.gpu_failed_jobs,
            r.encountering_jobs,
            fmt_opt(r.probability.map(|p| p * 100.0)),
        ));
    }
    csv
}

/// Job-size distribution table.
pub fn job_size_table_csv(rows: &[JobSizeRow]) -> String {
    let mut csv = String::from(
        "gpu_bucket,count,count_pct,mean_elapsed_minutes,p99_elapsed_minutes,failed,failed_pct,ml_gpu_hours,non_ml_gpu_hours\n",
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{:.3},{:.3},{:.3},{},{:.2},{:.2},{:.2}\n",
            r.bucket,
            r.count,
            r.count_pct,
            r.mean_elapsed_minutes,
            r.p99_elapsed_minutes,
            r.failed,
            r.failed_pct,
            r.ml_gpu_hours,
            r.non_ml_gpu_hours,
        ));
    }
    csv
}

/// Propagation edges as CSV.
pub fn edges_csv(edges: &[PropagationEdge], terminals: &[TerminalMark]) -> String {
    let mut sorted: Vec<&PropagationEdge> = edges.iter().collect();
    sorted.sort_by(|a, b| (&a.source_type, &a.target_type).cmp(&(&b.source_type, &b.target_type)));
    let mut csv = String::from(
        "source_type,target_type,scope,count,probability,mean_propagation_time_s\n",
    );
    for e in sorted {
        csv.push_str(&format!(
            "{},{},{},{},{:.6},{:.3}\n",
            e.source_type, e.target_type, e.scope, e.count, e.probability, e.mean_propagation_time,
        ));
    }
    let mut terms: Vec<&TerminalMark> = terminals.iter().collect();
    terms.sort_by(|a, b| a.source_type.cmp(&b.source_type));
    for t in terms {
        csv.push_str(&format!(
            "{},terminal,,{},{:.6},\n",
            t.source_type, t.terminal_count, t.terminal_probability,
        ));
    }
    csv
}

/// Inputs of a full report.
pub struct ReportInputs<'a> {
    pub coalesced: &'a [CoalescedError],
    pub errors: &'a [ErrorRecord],
    pub jobs: &'a [JobRecord],
    pub attributed: &'a [GpuFailedJob],
    pub intra_edges: &'a [PropagationEdge],
    pub intra_terminals: &'a [TerminalMark],
    pub inter_edges: &'a [PropagationEdge],
    pub inter_terminals: &'a [TerminalMark],
}

/// Compose the full report directory: resilience, job-failure, and
/// job-size tables plus DOT/JSON propagation graphs.
pub fn compose_report(
    inputs: &ReportInputs<'_>,
    taxonomy: &ErrorTaxonomy,
    fleet: &FleetConfig,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    let counts = crate::metrics::count_errors(inputs.coalesced, taxonomy, None, false);
    let reports = mtbe_reports(&counts, taxonomy, fleet)?;
    std::fs::write(
        out_dir.join("resilience_stats.csv"),
        resilience_table_csv(&reports, taxonomy, fleet),
    )?;

    let failure_rows = crate::jobimpact::failure_probability_per_xid(
        inputs.jobs,
        inputs.errors,
        inputs.attributed,
        taxonomy,
    );
    std::fs::write(
        out_dir.join("job_failures.csv"),
        job_failure_table_csv(&failure_rows),
    )?;

    let keywords = crate::ingest::default_ml_keywords();
    let size_rows = crate::jobimpact::job_size_stats(inputs.jobs, |j| {
        crate::ingest::classify_ml(j, &keywords)
    });
    std::fs::write(out_dir.join("job_sizes.csv"), job_size_table_csv(&size_rows))?;

    std::fs::write(
        out_dir.join("propagation_intra.dot"),
        emit_graph(inputs.intra_edges, inputs.intra_terminals, GraphFormat::Dot)?,
    )?;
    std::fs::write(
        out_dir.join("propagation_intra.json"),
        emit_graph(inputs.intra_edges, inputs.intra_terminals, GraphFormat::Json)?,
    )?;
    std::fs::write(
        out_dir.join("propagation_inter.dot"),
        emit_graph(inputs.inter_edges, inputs.inter_terminals, GraphFormat::Dot)?,
    )?;
    std::fs::write(
        out_dir.join("propagation_inter.json"),
        emit_graph(inputs.inter_edges, inputs.inter_terminals, GraphFormat::Json)?,
    )?;
    std::fs::write(
        out_dir.join("edges_intra.csv"),
        edges_csv(inputs.intra_edges, inputs.intra_terminals),
    )?;
    std::fs::write(
        out_dir.join("edges_inter.csv"),
        edges_csv(inputs.inter_edges, inputs.inter_terminals),
    )?;
    Ok(())
}
