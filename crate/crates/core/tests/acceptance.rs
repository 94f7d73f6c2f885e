//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fleet_reliability::coalesce::{coalesce, AnalysisParams, CoalescedError};
use fleet_reliability::ingest::{
    parse_error_log, ErrorRecord, FleetConfig, JobRecord, JobStatus, PatternSet,
};
use fleet_reliability::jobimpact::{attribute, failure_probability_per_xid, AttributionParams};
use fleet_reliability::metrics::{
    availability, count_errors, infer_consecutive_sbe, infer_uncorrectable, mtbe, nelson_aalen,
    AvailabilityInput,
};
use fleet_reliability::propagation::{build_edges, Scope};
use fleet_reliability::simulate::{required_overprovision, run as run_sim, SimConfig};
use fleet_reliability::synth::{gen_error_log, GenSpec, PlantedEdge};
use fleet_reliability::taxonomy::{Category, ErrorTaxonomy};

fn report(name: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match &outcome {
        Ok(()) => println!("[PASS] {name}"),
        Err(_) => println!("[FAIL] {name}"),
    }
    if let Err(e) = outcome {
        resume_unwind(e);
    }
}

fn record(ts: i64, node: &str, gpu: &str, pattern: &str, msg: &str) -> ErrorRecord {
    ErrorRecord {
        timestamp: ts,
        node_id: node.into(),
        gpu_id: gpu.into(),
        xid: Some(31),
        pattern_id: pattern.into(),
        message: msg.into(),
        category: Category::Hardware,
    }
}

/// Independent O(n^2) chain enumerator used as the coalescing oracle.
///
/// Walks the raw event list with consumed flags and no grouping structures:
/// each unconsumed event starts a chain; the chain absorbs subsequent
/// events of the same (node, gpu, pattern) while the message matches the
/// chain head and the gap from the latest absorbed event is within the
/// window, and stops at the first same-key event that does not match.
fn brute_force_coalesce(events: &[ErrorRecord], delta_t: i64) -> Vec<CoalescedError> {
    let mut consumed = vec![false; events.len()];
    let mut out: Vec<(usize, CoalescedError)> = Vec::new();
    for i in 0..events.len() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let head = &events[i];
        let mut latest = head.timestamp;
        let mut occurrences = 1u32;
        for j in (i + 1)..events.len() {
            if consumed[j] {
                continue;
            }
            let e = &events[j];
            if e.node_id != head.node_id
                || e.gpu_id != head.gpu_id
                || e.pattern_id != head.pattern_id
            {
                continue;
            }
            if e.message == head.message && e.timestamp - latest <= delta_t {
                consumed[j] = true;
                latest = e.timestamp;
                occurrences += 1;
            } else {
                break;
            }
        }
        out.push((
            i,
            CoalescedError {
                representative: head.clone(),
                start: head.timestamp,
                last: latest,
                persistence: latest - head.timestamp,
                occurrences,
            },
        ));
    }
    out.sort_by_key(|(idx, c)| (c.start, *idx));
    out.into_iter().map(|(_, c)| c).collect()
}

fn random_stream(seed: u64) -> Vec<ErrorRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=500);
    let nodes = ["n1", "n2", "n3"];
    let gpus = ["g0", "g1"];
    let patterns = ["p1", "p2"];
    let messages = ["alpha", "beta"];
    let mut t = 0i64;
    (0..n)
        .map(|_| {
            // Burst-heavy: mostly tiny gaps, occasionally large jumps.
            t += if rng.random_bool(0.8) {
                rng.random_range(0..=3)
            } else {
                rng.random_range(4..=30)
            };
            record(
                t,
                nodes[rng.random_range(0..nodes.len())],
                gpus[rng.random_range(0..gpus.len())],
                patterns[rng.random_range(0..patterns.len())],
                messages[rng.random_range(0..messages.len())],
            )
        })
        .collect()
}

#[test]
fn criterion_01_coalescing_matches_brute_force_oracle() {
    report("1 coalescing oracle equivalence (1000 random streams)", || {
        let params = AnalysisParams { delta_t: 5 };
        for seed in 0..1000u64 {
            let events = random_stream(seed);
            let fast = coalesce(&events, &params).unwrap();
            let slow = brute_force_coalesce(&events, params.delta_t);
            assert_eq!(fast, slow, "divergence on stream seed {seed}");
        }
    });
}

#[test]
fn criterion_02_coalescing_hand_case() {
    report("2 coalescing hand case t={0,4,8,20}", || {
        let events: Vec<ErrorRecord> = [0i64, 4, 8, 20]
            .iter()
            .map(|&t| record(t, "n1", "g0", "xid31", "MMU fault"))
            .collect();
        let out = coalesce(&events, &AnalysisParams { delta_t: 5 }).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].persistence, 8);
        assert_eq!(out[0].occurrences, 3);
        assert_eq!(out[1].persistence, 0);
        assert_eq!(out[1].occurrences, 1);
    });
}

#[test]
fn criterion_03_derived_count_identities() {
    report("3 derived memory-error count identities", || {
        assert_eq!(infer_uncorrectable(34, 0), 34);
        assert_eq!(infer_consecutive_sbe(34, 1).unwrap(), 33);
        assert_eq!(infer_uncorrectable(16, 8), 24);
        assert_eq!(infer_consecutive_sbe(24, 17).unwrap(), 7);
    });
}

#[test]
fn criterion_04_mtbe_normalization_arithmetic() {
    report("4 MTBE normalization chain arithmetic", || {
        // Observation hours chosen so a count of 1 puts the per-node MTBE at
        // the reference values; the chain factors do the rest.
        let mut h100 = FleetConfig::h100();
        h100.observation_hours = 22_192.0 / f64::from(h100.node_count);
        let h = mtbe("x", 1, &h100).unwrap();
        assert_eq!(h.mtbe_per_node.unwrap(), 22_192.0);
        assert_eq!(h.mtbe_per_gpu.unwrap(), 88_768.0);
        assert_eq!(h.mtbe_per_gb.unwrap(), 8_521_728.0);

        let mut a100 = FleetConfig::a100();
        a100.observation_hours = 66_967.0 / f64::from(a100.node_count);
        let a = mtbe("x", 1, &a100).unwrap();
        let a_per_gpu = a.mtbe_per_gpu.unwrap();
        let a_per_gb = a.mtbe_per_gb.unwrap();
        assert!((a_per_gpu - 283_271.0).abs() / 283_271.0 < 0.005);
        assert!((a_per_gb - 11_330_826.0).abs() / 11_330_826.0 < 0.005);

        let ratio = a_per_gpu / h.mtbe_per_gpu.unwrap();
        assert!((3.1..=3.3).contains(&ratio), "per-GPU ratio {ratio}");
    });
}

#[test]
fn criterion_05_availability_formula() {
    report("5 availability from MTTF/MTTR", || {
        let a = availability(AvailabilityInput { mttf: 154.0, mttr: 0.88 }).unwrap();
        assert!((a - 0.994).abs() < 0.0005, "A100 availability {a}");
        let h = availability(AvailabilityInput { mttf: 292.0, mttr: 2.2 }).unwrap();
        assert!((h - 0.993).abs() < 0.0005, "H100 availability {h}");
    });
}

#[test]
fn criterion_06_mtbe_estimator_convergence() {
    report("6 MTBE estimator convergence on Poisson log", || {
        let taxonomy = ErrorTaxonomy::default_table();
        let patterns = PatternSet::default_nvidia(&taxonomy);
        let fleet = FleetConfig {
            fleet_name: "poisson".into(),
            node_count: 1000,
            gpus_total: 4000,
            gb_per_gpu: 96.0,
            observation_hours: 1000.0,
            nodes: None,
        };
        let mut rates = BTreeMap::new();
        rates.insert("xid31".to_string(), 0.01);
        let spec = GenSpec {
            seed: 1234,
            duration_hours: 1000.0,
            fleet: fleet.clone(),
            per_type_rate: rates,
            burst: None,
            planted_edges: vec![],
            job_spec: None,
        };
        let (lines, _) = gen_error_log(&spec, &taxonomy).unwrap();
        let parsed =
            parse_error_log(std::io::Cursor::new(lines.join("\n")), &patterns, &taxonomy).unwrap();
        let coalesced = coalesce(&parsed.records, &AnalysisParams::default()).unwrap();
        let counts = count_errors(&coalesced, &taxonomy, None, false);
        let report = mtbe("xid31", counts["xid31"], &fleet).unwrap();
        // 10^6 node-hours at lambda = 1/100 per node-hour.
        let per_node = report.mtbe_per_node.unwrap();
        assert!(
            (per_node - 100.0).abs() / 100.0 < 0.03,
            "per-node MTBE {per_node} outside 3% of 100h"
        );
    });
}

#[test]
fn criterion_07_propagation_probability_recovery() {
    report("7 planted propagation edge recovered within 0.02", || {
        let taxonomy = ErrorTaxonomy::default_table();
        let patterns = PatternSet::default_nvidia(&taxonomy);
        let mut rates = BTreeMap::new();
        rates.insert("xid79".to_string(), 0.1);
        let spec = GenSpec {
            seed: 99,
            duration_hours: 1000.0,
            fleet: FleetConfig {
                fleet_name: "prop".into(),
                node_count: 50,
                gpus_total: 200,
                gb_per_gpu: 96.0,
                observation_hours: 1000.0,
                nodes: None,
            },
            per_type_rate: rates,
            burst: None,
            planted_edges: vec![PlantedEdge {
                source: "xid79".into(),
                target: "xid63".into(),
                probability: 0.88,
                gap_secs: 2,
            }],
            job_spec: None,
        };
        let (lines, manifest) = gen_error_log(&spec, &taxonomy).unwrap();
        let sources = manifest.base_events.iter().filter(|e| !e.planted).count();
        assert!(sources > 4000, "want ~5000 source events, got {sources}");
        let parsed =
            parse_error_log(std::io::Cursor::new(lines.join("\n")), &patterns, &taxonomy).unwrap();
        let coalesced = coalesce(&parsed.records, &AnalysisParams::default()).unwrap();
        let (edges, terminals) = build_edges(
            &coalesced,
            &AnalysisParams::default(),
            Scope::IntraGpu,
            &taxonomy,
        )
        .unwrap();

        let edge = edges
            .iter()
            .find(|e| e.source_type == "xid79" && e.target_type == "xid63")
            .expect("planted edge present");
        assert!(
            (edge.probability - 0.88).abs() <= 0.02,
            "recovered probability {}",
            edge.probability
        );

        // Edge + terminal probabilities sum to one per source type.
        for t in &terminals {
            let edge_sum: f64 = edges
                .iter()
                .filter(|e| e.source_type == t.source_type)
                .map(|e| e.probability)
                .sum();
            let total = edge_sum + t.terminal_probability;
            assert!(
                (total - 1.0).abs() < 1e-9,
                "{}: probabilities sum to {total}",
                t.source_type
            );
        }
    });
}

#[test]
fn criterion_08_job_failure_probability_quotients() {
    report("8 job failure probability quotients (100% and 53.75%)", || {
        let taxonomy = ErrorTaxonomy::default_table();
        let params = AttributionParams { window: 20 };

        let nvlink = |ts: i64, node: &str| ErrorRecord {
            timestamp: ts,
            node_id: node.into(),
            gpu_id: "0000:07:00".into(),
            xid: Some(74),
            pattern_id: "xid74".into(),
            message: "NVLink error".into(),
            category: Category::Interconnect,
        };
        let job = |id: u32, node: &str, start: i64, end: i64, status: JobStatus| JobRecord {
            job_id: format!("job{id}"),
            submit: start,
            start,
            end,
            node_ids: vec![node.to_string()],
            gpu_count: 4,
            exit_code: if status == JobStatus::Failed { 1 } else { 0 },
            status,
            name: "solver".into(),
            loaded_modules: vec!["cuda".into()],
            zombie: false,
        };

        let build = |encountering: u32, failing: u32| -> (Vec<JobRecord>, Vec<ErrorRecord>) {
            let mut jobs = Vec::new();
            let mut errors = Vec::new();
            for i in 0..encountering {
                let node = format!("node{i:03}");
                let start = 1000 * i64::from(i);
                let end = start + 600;
                if i < failing {
                    // Error inside the 20 s window before the failed end.
                    errors.push(nvlink(end - 5, &node));
                    jobs.push(job(i, &node, start, end, JobStatus::Failed));
                } else {
                    // Error during the job but well before its end.
                    errors.push(nvlink(start + 100, &node));
                    jobs.push(job(i, &node, start, end, JobStatus::Completed));
                }
            }
            errors.sort_by_key(|e| e.timestamp);
            (jobs, errors)
        };

        let (jobs, errors) = build(31, 31);
        let attributed = attribute(&jobs, &errors, &params).unwrap();
        let rows = failure_probability_per_xid(&jobs, &errors, &attributed, &taxonomy);
        let row = rows.iter().find(|r| r.error_type == "xid74").unwrap();
        assert_eq!((row.encountering_jobs, row.gpu_failed_jobs), (31, 31));
        assert_eq!(row.probability, Some(1.0));

        let (jobs, errors) = build(80, 43);
        let attributed = attribute(&jobs, &errors, &params).unwrap();
        let rows = failure_probability_per_xid(&jobs, &errors, &attributed, &taxonomy);
        let row = rows.iter().find(|r| r.error_type == "xid74").unwrap();
        assert_eq!((row.encountering_jobs, row.gpu_failed_jobs), (80, 43));
        assert_eq!(row.probability, Some(0.5375));
    });
}

#[test]
fn criterion_09_simulator_renewal_limit() {
    report("9 simulator renewal limit 100/101", || {
        let cfg = SimConfig {
            job_gpus: 4,
            gpus_per_node: 4,
            duration_hours: 1_000_000.0,
            node_mtbf_hours: 100.0,
            recovery_time_hours: 1.0,
            spare_gpus: 0,
            seed: 5,
            replications: 1,
            time_step_hours: 0.5,
        };
        let result = run_sim(&cfg).unwrap();
        let expected = 100.0 / 101.0;
        assert!(
            (result.achieved_availability - expected).abs() / expected < 0.01,
            "availability {} vs renewal limit {expected}",
            result.achieved_availability
        );
    });
}

#[test]
fn criterion_10_overprovision_projection() {
    report("10 608-GPU overprovision projection and recovery-time ratio", || {
        let base = SimConfig {
            job_gpus: 608,
            gpus_per_node: 4,
            duration_hours: 720.0,
            node_mtbf_hours: 292.0,
            recovery_time_hours: 2.2,
            spare_gpus: 0,
            seed: 7,
            replications: 100,
            time_step_hours: 0.5,
        };
        let slow = required_overprovision(&base, 0.999).unwrap();
        assert!(
            (0.03..=0.07).contains(&slow.fraction),
            "2.2h-recovery overprovision {}",
            slow.fraction
        );

        let mut fast_cfg = base.clone();
        fast_cfg.recovery_time_hours = 5.0 / 60.0;
        let fast = required_overprovision(&fast_cfg, 0.999).unwrap();
        assert!(
            (0.01..=0.03).contains(&fast.fraction),
            "5min-recovery overprovision {}",
            fast.fraction
        );

        let ratio = slow.fraction / fast.fraction;
        assert!((1.5..=3.5).contains(&ratio), "overprovision ratio {ratio}");
    });
}

#[test]
fn criterion_11_nelson_aalen_hand_case() {
    report("11 cumulative hazard hand case", || {
        let at_risk = |t: f64| if t <= 2.0 { 3 } else { 2 };
        let curve = nelson_aalen(&[2.0, 5.0], at_risk).unwrap();
        assert_eq!(curve.steps.len(), 2);
        assert!((curve.steps[0].cumulative_hazard - 1.0 / 3.0).abs() < 1e-12);
        assert!((curve.steps[1].cumulative_hazard - 5.0 / 6.0).abs() < 1e-12);
    });
}

fn run_pipeline(bin: &str, root: &Path) {
    let run = |args: &[&str]| {
        let status = Command::new(bin)
            .args(args)
            .current_dir(root)
            .status()
            .expect("spawn fleetres");
        assert!(status.success(), "fleetres {args:?} failed");
    };
    run(&["synth", "--seed", "42", "--out", "synth"]);
    run(&[
        "ingest",
        "--log",
        "synth/errors.log",
        "--jobs",
        "synth/jobs.csv",
        "--out",
        "ingest",
    ]);
    run(&["coalesce", "--input", "ingest/errors.jsonl", "--out", "co"]);
    run(&[
        "stats",
        "--input",
        "co/coalesced.jsonl",
        "--fleet",
        "h100",
        "--out",
        "stats",
    ]);
    run(&[
        "propagate",
        "--input",
        "co/coalesced.jsonl",
        "--scope",
        "intra",
        "--out",
        "prop",
    ]);
    run(&[
        "jobs",
        "--jobs",
        "ingest/jobs.jsonl",
        "--errors",
        "ingest/errors.jsonl",
        "--out",
        "jobs",
    ]);
    run(&[
        "report",
        "--errors",
        "ingest/errors.jsonl",
        "--coalesced",
        "co/coalesced.jsonl",
        "--jobs",
        "ingest/jobs.jsonl",
        "--fleet",
        "h100",
        "--out",
        "report",
    ]);
}

fn collect_files(root: &Path, rel: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in std::fs::read_dir(root.join(rel)).unwrap() {
        let entry = entry.unwrap();
        let rel_path = rel.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            collect_files(root, &rel_path, out);
        } else {
            out.push(rel_path);
        }
    }
}

#[test]
fn criterion_12_end_to_end_determinism() {
    report("12 end-to-end pipeline is byte-identical across runs", || {
        let bin = env!("CARGO_BIN_EXE_fleetres");
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_pipeline(bin, dir_a.path());
        run_pipeline(bin, dir_b.path());

        let mut files_a = Vec::new();
        collect_files(dir_a.path(), Path::new(""), &mut files_a);
        files_a.sort();
        let mut files_b = Vec::new();
        collect_files(dir_b.path(), Path::new(""), &mut files_b);
        files_b.sort();
        assert_eq!(files_a, files_b, "artifact sets differ");
        assert!(files_a.len() >= 20, "expected full artifact set");
        for rel in &files_a {
            let a = std::fs::read(dir_a.path().join(rel)).unwrap();
            let b = std::fs::read(dir_b.path().join(rel)).unwrap();
            assert_eq!(a, b, "artifact {} differs between runs", rel.display());
        }
    });
}
