//! `fleetres`: command-line front end wiring the analysis stages together
//! through plain files (JSONL records, CSV tables, DOT graphs).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fleet_reliability::coalesce::{coalesce, coalesce_stats, AnalysisParams, CoalescedError};
use fleet_reliability::config::PipelineConfig;
use fleet_reliability::error::{Error, Result};
use fleet_reliability::ingest::{
    parse_error_log, parse_job_log, ErrorRecord, JobRecord,
};
use fleet_reliability::jobimpact::{
    attribute, downtime_stats, failure_probability_per_xid, job_size_stats,
    reconstruct_downtime, AttributionParams, GpuFailedJob,
};
use fleet_reliability::metrics::count_errors;
use fleet_reliability::propagation::{build_edges, emit_graph, GraphFormat, Scope};
use fleet_reliability::report::{
    compose_report, edges_csv, job_failure_table_csv, job_size_table_csv, mtbe_reports,
    resilience_table_csv, ReportInputs,
};
use fleet_reliability::simulate::{
    required_overprovision, run as run_simulation, sweep_recovery_time, SimConfig,
};
use fleet_reliability::synth::{gen_error_log, gen_job_trace, GenSpec};
use fleet_reliability::io as fio;

#[derive(Parser)]
#[command(name = "fleetres", version, about = "GPU fleet reliability analysis")]
struct Cli {
    /// Pipeline config TOML (fleets, patterns, taxonomy, defaults).
    #[arg(long, global = true, env = "FLEETRES_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "FLEETRES_OUT")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic error log, job trace, and ground-truth manifest.
    Synth {
        /// GenSpec TOML; a small demo spec is used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Seed override.
        #[arg(long, env = "FLEETRES_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Parse raw system logs and job CSVs into typed JSONL streams.
    Ingest {
        /// Raw log files, processed in order.
        #[arg(long, num_args = 1..)]
        log: Vec<PathBuf>,
        /// Job accounting CSV.
        #[arg(long)]
        jobs: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Coalesce identical adjacent errors into bursts with persistence.
    Coalesce {
        /// ErrorRecord JSONL.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "FLEETRES_DELTA_T")]
        delta_t: Option<i64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Error counts and MTBE tables for a fleet.
    Stats {
        /// CoalescedError JSONL.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "FLEETRES_FLEET")]
        fleet: String,
        #[command(flatten)]
        out: OutDir,
    },
    /// Mine propagation edges and emit graphs.
    Propagate {
        /// CoalescedError JSONL.
        #[arg(long)]
        input: PathBuf,
        /// intra or inter.
        #[arg(long, default_value = "intra")]
        scope: String,
        #[arg(long, env = "FLEETRES_DELTA_T")]
        delta_t: Option<i64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Attribute job failures to GPU errors and build job tables.
    Jobs {
        /// JobRecord JSONL.
        #[arg(long)]
        jobs: PathBuf,
        /// ErrorRecord JSONL.
        #[arg(long)]
        errors: PathBuf,
        #[arg(long, env = "FLEETRES_WINDOW")]
        window: Option<i64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Project availability and required overprovisioning by simulation.
    Simulate {
        #[arg(long, default_value_t = 608)]
        gpus: u32,
        #[arg(long, default_value_t = 4)]
        gpus_per_node: u32,
        #[arg(long, default_value_t = 720.0)]
        duration_hours: f64,
        /// Per-node MTBF, hours.
        #[arg(long)]
        mtbf: f64,
        /// Recovery time, hours.
        #[arg(long)]
        recovery: f64,
        #[arg(long, default_value_t = 0)]
        spares: u32,
        /// Search for the minimum spares meeting this availability target.
        #[arg(long)]
        target: Option<f64>,
        /// Comma-separated recovery times for a sweep (requires --target).
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 7, env = "FLEETRES_SEED")]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        replications: u32,
        #[arg(long, default_value_t = 0.5)]
        time_step: f64,
        /// Output directory; prints JSON to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose the full report directory (tables + graphs).
    Report {
        #[arg(long)]
        errors: PathBuf,
        #[arg(long)]
        coalesced: PathBuf,
        #[arg(long)]
        jobs: PathBuf,
        #[arg(long, env = "FLEETRES_FLEET")]
        fleet: String,
        #[arg(long, env = "FLEETRES_WINDOW")]
        window: Option<i64>,
        #[arg(long, env = "FLEETRES_DELTA_T")]
        delta_t: Option<i64>,
        #[command(flatten)]
        out: OutDir,
    },
}

fn demo_spec(seed: u64) -> GenSpec {
    let mut rates = BTreeMap::new();
    rates.insert("xid31".to_string(), 0.02);
    rates.insert("xid48".to_string(), 0.002);
    rates.insert("xid63".to_string(), 0.004);
    rates.insert("xid74".to_string(), 0.01);
    rates.insert("xid119_120".to_string(), 0.015);
    GenSpec {
        seed,
        duration_hours: 500.0,
        fleet: fleet_reliability::ingest::FleetConfig {
            fleet_name: "demo".into(),
            node_count: 16,
            gpus_total: 64,
            gb_per_gpu: 96.0,
            observation_hours: 500.0,
            nodes: None,
        },
        per_type_rate: rates,
        burst: Some(fleet_reliability::synth::BurstSpec {
            burst_prob: 0.3,
            burst_len: (2, 6),
            intra_gap_secs: (1, 4),
        }),
        planted_edges: vec![fleet_reliability::synth::PlantedEdge {
            source: "xid119_120".into(),
            target: "xid31".into(),
            probability: 0.6,
            gap_secs: 2,
        }],
        job_spec: Some(fleet_reliability::synth::JobSpec::default()),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn read_errors(path: &Path) -> Result<Vec<ErrorRecord>> {
    fio::read_jsonl(path)
}

fn read_coalesced(path: &Path) -> Result<Vec<CoalescedError>> {
    fio::read_jsonl(path)
}

fn read_jobs(path: &Path) -> Result<Vec<JobRecord>> {
    fio::read_jsonl(path)
}

fn execute(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config)?;
    let taxonomy = config.taxonomy()?;

    match cli.command {
        Command::Synth { spec, seed, out } => {
            let mut gen_spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
                    toml::from_str(&text)
                        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?
                }
                None => demo_spec(seed.unwrap_or(42)),
            };
            if let Some(s) = seed {
                gen_spec.seed = s;
            }
            std::fs::create_dir_all(&out.out)?;
            let (lines, mut manifest) = gen_error_log(&gen_spec, &taxonomy)?;
            std::fs::write(out.out.join("errors.log"), lines.join("\n") + "\n")?;
            if gen_spec.job_spec.is_some() {
                let csv = gen_job_trace(&gen_spec, &mut manifest, &taxonomy)?;
                std::fs::write(out.out.join("jobs.csv"), csv)?;
            }
            std::fs::write(out.out.join("manifest.jsonl"), manifest.to_jsonl()?)?;
            println!(
                "generated {} log lines, {} base events, {} jobs (seed {})",
                manifest.total_log_lines,
                manifest.base_events.len(),
                manifest.total_jobs,
                gen_spec.seed
            );
        }
        Command::Ingest { log, jobs, out } => {
            if log.is_empty() && jobs.is_none() {
                return Err(Error::usage("ingest needs --log and/or --jobs"));
            }
            std::fs::create_dir_all(&out.out)?;
            let patterns = config.pattern_set(&taxonomy)?;
            if !log.is_empty() {
                let mut all = Vec::new();
                let mut matched = 0usize;
                let mut skipped = 0usize;
                for path in &log {
                    let reader = BufReader::new(File::open(path)?);
                    let outcome = parse_error_log(reader, &patterns, &taxonomy)?;
                    matched += outcome.matched;
                    skipped += outcome.skipped;
                    for d in &outcome.diagnostics {
                        eprintln!("{}: {d}", path.display());
                    }
                    all.push(outcome.records);
                }
                // Deterministic global order: timestamp, then file order,
                // then line order (stable sort over concatenation).
                let mut merged: Vec<ErrorRecord> = all.into_iter().flatten().collect();
                merged.sort_by_key(|r| r.timestamp);
                fio::write_jsonl(&out.out.join("errors.jsonl"), &merged)?;
                println!("errors: {matched} matched, {skipped} skipped");
            }
            if let Some(path) = jobs {
                let outcome = parse_job_log(BufReader::new(File::open(&path)?))?;
                for d in &outcome.diagnostics {
                    eprintln!("{}: {d}", path.display());
                }
                fio::write_jsonl(&out.out.join("jobs.jsonl"), &outcome.records)?;
                println!(
                    "jobs: {} matched, {} skipped",
                    outcome.matched, outcome.skipped
                );
            }
        }
        Command::Coalesce { input, delta_t, out } => {
            let params = AnalysisParams::new(delta_t.unwrap_or(config.delta_t))?;
            let events = read_errors(&input)?;
            let coalesced = coalesce(&events, &params)?;
            std::fs::create_dir_all(&out.out)?;
            fio::write_jsonl(&out.out.join("coalesced.jsonl"), &coalesced)?;
            let summary = coalesce_stats(&coalesced);
            std::fs::write(
                out.out.join("coalesce_summary.json"),
                serde_json::to_string_pretty(&summary)?,
            )?;
            println!("{} events -> {} coalesced", events.len(), coalesced.len());
        }
        Command::Stats { input, fleet, out } => {
            let fleet = config.select_fleet(&fleet)?;
            let coalesced = read_coalesced(&input)?;
            let counts = count_errors(&coalesced, &taxonomy, None, false);
            std::fs::create_dir_all(&out.out)?;
            let reports = mtbe_reports(&counts, &taxonomy, fleet)?;
            std::fs::write(
                out.out.join("resilience_stats.csv"),
                resilience_table_csv(&reports, &taxonomy, fleet),
            )?;
            std::fs::write(
                out.out.join("mtbe.json"),
                serde_json::to_string_pretty(&reports)?,
            )?;
            println!("{} error types", counts.len());
        }
        Command::Propagate {
            input,
            scope,
            delta_t,
            out,
        } => {
            let scope = match scope.as_str() {
                "intra" => Scope::IntraGpu,
                "inter" => Scope::InterGpu,
                other => return Err(Error::usage(format!("unknown scope {other}"))),
            };
            let params = AnalysisParams::new(delta_t.unwrap_or(config.delta_t))?;
            let coalesced = read_coalesced(&input)?;
            let (edges, terminals) = build_edges(&coalesced, &params, scope, &taxonomy)?;
            std::fs::create_dir_all(&out.out)?;
            std::fs::write(out.out.join("edges.csv"), edges_csv(&edges, &terminals))?;
            fio::write_jsonl(&out.out.join("edges.jsonl"), &edges)?;
            std::fs::write(
                out.out.join("graph.dot"),
                emit_graph(&edges, &terminals, GraphFormat::Dot)?,
            )?;
            std::fs::write(
                out.out.join("graph.json"),
                emit_graph(&edges, &terminals, GraphFormat::Json)?,
            )?;
            println!("{} edges, {} source types", edges.len(), terminals.len());
        }
        Command::Jobs {
            jobs,
            errors,
            window,
            out,
        } => {
            let params = AttributionParams {
                window: window.unwrap_or(config.window),
            };
            let jobs = read_jobs(&jobs)?;
            let errors = read_errors(&errors)?;
            let attributed = attribute(&jobs, &errors, &params)?;
            std::fs::create_dir_all(&out.out)?;
            fio::write_jsonl(&out.out.join("attributed.jsonl"), &attributed)?;
            let rows = failure_probability_per_xid(&jobs, &errors, &attributed, &taxonomy);
            std::fs::write(out.out.join("job_failures.csv"), job_failure_table_csv(&rows))?;
            let keywords = fleet_reliability::ingest::default_ml_keywords();
            let sizes = job_size_stats(&jobs, |j| {
                fleet_reliability::ingest::classify_ml(j, &keywords)
            });
            std::fs::write(out.out.join("job_sizes.csv"), job_size_table_csv(&sizes))?;
            let downtime = reconstruct_downtime(&errors, &jobs, &taxonomy);
            let stats = downtime_stats(&downtime)?;
            fio::write_jsonl(&out.out.join("downtime.jsonl"), &downtime)?;
            std::fs::write(
                out.out.join("downtime_stats.json"),
                serde_json::to_string_pretty(&stats)?,
            )?;
            println!("{} GPU-failed jobs of {}", attributed.len(), jobs.len());
        }
        Command::Simulate {
            gpus,
            gpus_per_node,
            duration_hours,
            mtbf,
            recovery,
            spares,
            target,
            sweep,
            seed,
            replications,
            time_step,
            out,
        } => {
            let cfg = SimConfig {
                job_gpus: gpus,
                gpus_per_node,
                duration_hours,
                node_mtbf_hours: mtbf,
                recovery_time_hours: recovery,
                spare_gpus: spares,
                seed,
                replications,
                time_step_hours: time_step,
            };
            let write_or_print = |name: &str, body: String| -> Result<()> {
                match &out {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)?;
                        std::fs::write(dir.join(name), body)?;
                    }
                    None => println!("{body}"),
                }
                Ok(())
            };
            match (target, sweep) {
                (Some(target), Some(sweep)) => {
                    let times: Vec<f64> = sweep
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::usage(format!("bad sweep value {s}: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    let rows = sweep_recovery_time(&cfg, &times, target)?;
                    let mut csv = String::from(
                        "recovery_time_hours,spare_gpus,overprovision_fraction,achieved_availability\n",
                    );
                    for r in &rows {
                        csv.push_str(&format!(
                            "{},{},{:.6},{:.6}\n",
                            r.recovery_time_hours,
                            r.spare_gpus,
                            r.overprovision_fraction,
                            r.achieved_availability
                        ));
                    }
                    write_or_print("sweep.csv", csv)?;
                }
                (Some(target), None) => {
                    let result = required_overprovision(&cfg, target)?;
                    write_or_print(
                        "overprovision.json",
                        serde_json::to_string_pretty(&result)?,
                    )?;
                }
                (None, Some(_)) => {
                    return Err(Error::usage("--sweep requires --target"));
                }
                (None, None) => {
                    let result = run_simulation(&cfg)?;
                    write_or_print("simulation.json", serde_json::to_string_pretty(&result)?)?;
                }
            }
        }
        Command::Report {
            errors,
            coalesced,
            jobs,
            fleet,
            window,
            delta_t,
            out,
        } => {
            let fleet = config.select_fleet(&fleet)?;
            let errors = read_errors(&errors)?;
            let coalesced = read_coalesced(&coalesced)?;
            let jobs = read_jobs(&jobs)?;
            let params = AnalysisParams::new(delta_t.unwrap_or(config.delta_t))?;
            let attribution = AttributionParams {
                window: window.unwrap_or(config.window),
            };
            let attributed: Vec<GpuFailedJob> = attribute(&jobs, &errors, &attribution)?;
            let (intra_edges, intra_terminals) =
                build_edges(&coalesced, &params, Scope::IntraGpu, &taxonomy)?;
            let (inter_edges, inter_terminals) =
                build_edges(&coalesced, &params, Scope::InterGpu, &taxonomy)?;
            compose_report(
                &ReportInputs {
                    coalesced: &coalesced,
                    errors: &errors,
                    jobs: &jobs,
                    attributed: &attributed,
                    intra_edges: &intra_edges,
                    intra_terminals: &intra_terminals,
                    inter_edges: &inter_edges,
                    inter_terminals: &inter_terminals,
                },
                &taxonomy,
                fleet,
                &out.out,
            )?;
            println!("report written to {}", out.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fleetres: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
