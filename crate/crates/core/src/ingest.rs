//! Parsing of raw system-log lines and job-accounting records into typed
//! event streams, driven by a configurable pattern registry.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::DateTime;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{Category, ErrorTaxonomy};

/// One timestamped GPU error event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// UTC seconds. Sub-second timing is not preserved; ties keep log order.
    pub timestamp: i64,
    pub node_id: String,
    /// PCI bus address; empty when the driver message omits it.
    pub gpu_id: String,
    pub xid: Option<u32>,
    pub pattern_id: String,
    pub message: String,
    pub category: Category,
}

/// Job status as reported by the scheduler accounting database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Completed,
    Failed,
    Cancelled,
    Timeout,
}

impl std::str::FromStr for JobStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "completed" => Ok(JobStatus::Completed),
            "failed" => Ok(JobStatus::Failed),
            "cancelled" | "canceled" => Ok(JobStatus::Cancelled),
            "timeout" => Ok(JobStatus::Timeout),
            other => Err(Error::data(format!("unknown job status: {other}"))),
        }
    }
}

/// One scheduler job accounting record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub submit: i64,
    pub start: i64,
    pub end: i64,
    pub node_ids: Vec<String>,
    pub gpu_count: u32,
    pub exit_code: i32,
    pub status: JobStatus,
    pub name: String,
    pub loaded_modules: Vec<String>,
    /// Failed but never terminated by the scheduler; excluded from attribution.
    #[serde(default)]
    pub zombie: bool,
}

impl JobRecord {
    pub fn elapsed_seconds(&self) -> i64 {
        self.end - self.start
    }
}

/// Fleet-level inventory used for MTBE normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FleetConfig {
    pub fleet_name: String,
    pub node_count: u32,
    pub gpus_total: u32,
    pub gb_per_gpu: f64,
    pub observation_hours: f64,
    /// Per-node GPU counts for heterogeneous fleets.
    #[serde(default)]
    pub nodes: Option<BTreeMap<String, u32>>,
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 || self.gpus_total == 0 {
            return Err(Error::config("fleet must have nodes and GPUs"));
        }
        if self.gb_per_gpu <= 0.0 || self.observation_hours <= 0.0 {
            return Err(Error::config(
                "gb_per_gpu and observation_hours must be positive",
            ));
        }
        if let Some(nodes) = &self.nodes {
            if nodes.len() != self.node_count as usize {
                return Err(Error::config("per-node list does not match node_count"));
            }
            let total: u32 = nodes.values().sum();
            if total != self.gpus_total {
                return Err(Error::config(format!(
                    "per-node GPU counts sum to {total}, expected {}",
                    self.gpus_total
                )));
            }
        }
        Ok(())
    }

    /// Fleet-average GPUs per node.
    pub fn gpus_per_node(&self) -> f64 {
        f64::from(self.gpus_total) / f64::from(self.node_count)
    }

    /// 106 mixed 4-/8-way nodes with 448 A100 40 GB GPUs.
    pub fn a100() -> Self {
        FleetConfig {
            fleet_name: "a100".into(),
            node_count: 106,
            gpus_total: 448,
            gb_per_gpu: 40.0,
            observation_hours: 895.0 * 24.0,
            nodes: None,
        }
    }

    /// 152 4-way nodes with 608 H100 96 GB GPUs.
    pub fn h100() -> Self {
        FleetConfig {
            fleet_name: "h100".into(),
            node_count: 152,
            gpus_total: 608,
            gb_per_gpu: 96.0,
            observation_hours: 895.0 * 24.0,
            nodes: None,
        }
    }
}

/// One entry of the pattern registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pattern {
    pub id: String,
    pub regex: String,
    /// XID code this pattern maps to; `None` for inferred/derived patterns.
    pub xid: Option<u32>,
    pub category: Category,
}

/// Ordered pattern registry; first matching pattern wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
}

/// Canonical NVRM line shape: `<rfc3339> <node> kernel: NVRM: Xid (PCI:<bus>): <xid>, <msg>`.
fn nvrm_regex(xids: &[u32]) -> String {
    let alt = xids
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("|");
    format!(
        r"^(?P<ts>\S+)\s+(?P<node>\S+)\s+kernel:\s+NVRM:\s+Xid\s+\((?:PCI:)?(?P<pci>[0-9a-fA-F:.]*)\):\s+(?P<xid>{alt}),\s*(?P<msg>.*)$"
    )
}

impl PatternSet {
    /// Default registry covering the canonical NVRM Xid line shape for every
    /// XID in the taxonomy.
    pub fn default_nvidia(taxonomy: &ErrorTaxonomy) -> Self {
        let mut patterns = Vec::new();
        for entry in taxonomy.countable_labels() {
            if entry.xids.is_empty() {
                continue;
            }
            patterns.push(Pattern {
                id: entry.label.clone(),
                regex: nvrm_regex(&entry.xids),
                xid: Some(entry.xids[0]),
                category: entry.category,
            });
        }
        PatternSet { patterns }
    }

    pub fn validate(&self, taxonomy: &ErrorTaxonomy) -> Result<()> {
        let mut ids = BTreeMap::new();
        for p in &self.patterns {
            if ids.insert(p.id.clone(), ()).is_some() {
                return Err(Error::config(format!("duplicate pattern id {}", p.id)));
            }
            Regex::new(&p.regex)
                .map_err(|e| Error::config(format!("pattern {}: invalid regex: {e}", p.id)))?;
        }
        // Every XID in the taxonomy must be matchable by at least one pattern.
        for entry in taxonomy.countable_labels() {
            for xid in &entry.xids {
                let covered = self.patterns.iter().any(|p| {
                    p.xid == Some(*xid)
                        || Regex::new(&p.regex)
                            .map(|r| r.as_str().contains(&xid.to_string()))
                            .unwrap_or(false)
                });
                if !covered {
                    return Err(Error::config(format!(
                        "taxonomy xid {xid} ({}) has no pattern",
                        entry.label
                    )));
                }
            }
        }
        Ok(())
    }

    fn compile(&self) -> Result<Vec<(Pattern, Regex)>> {
        self.patterns
            .iter()
            .map(|p| {
                Regex::new(&p.regex)
                    .map(|r| (p.clone(), r))
                    .map_err(|e| Error::config(format!("pattern {}: invalid regex: {e}", p.id)))
            })
            .collect()
    }
}

/// Strip variable payloads (addresses, pids) so identical faults produce
/// identical messages, and collapse whitespace.
pub fn normalize_message(raw: &str) -> String {
    // Compiling these on every call would be wasteful; cache them.
    use std::sync::OnceLock;
    static HEX: OnceLock<Regex> = OnceLock::new();
    static PID: OnceLock<Regex> = OnceLock::new();
    let hex = HEX.get_or_init(|| Regex::new(r"0x[0-9a-fA-F]+").unwrap());
    let pid = PID.get_or_init(|| Regex::new(r"pid=\d+").unwrap());
    let s = hex.replace_all(raw.trim(), "0x*");
    let s = pid.replace_all(&s, "pid=*");
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Outcome of a log parse: records plus match/skip accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseOutcome<T> {
    pub records: Vec<T>,
    pub matched: usize,
    pub skipped: usize,
    pub diagnostics: Vec<String>,
}

fn parse_timestamp(s: &str) -> Result<i64> {
    if let Ok(secs) = s.parse::<i64>() {
        if secs >= 0 {
            return Ok(secs);
        }
        return Err(Error::data(format!("negative timestamp {s}")));
    }
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp())
        .map_err(|e| Error::data(format!("bad timestamp {s:?}: {e}")))
}

/// Parse newline-delimited system log text into error records.
///
/// Non-matching lines are skipped and counted; a malformed timestamp in a
/// matching line yields a per-line diagnostic and skips that line.
pub fn parse_error_log<R: BufRead>(
    reader: R,
    patterns: &PatternSet,
    taxonomy: &ErrorTaxonomy,
) -> Result<ParseOutcome<ErrorRecord>> {
    patterns.validate(taxonomy)?;
    let compiled = patterns.compile()?;

    let mut records = Vec::new();
    let mut matched = 0usize;
    let mut skipped = 0usize;
    let mut diagnostics = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut hit = false;
        for (pattern, regex) in &compiled {
            if let Some(caps) = regex.captures(&line) {
                hit = true;
                let ts = caps.name("ts").map(|m| m.as_str()).unwrap_or_default();
                match parse_timestamp(ts) {
                    Ok(timestamp) => {
                        let node_id = caps
                            .name("node")
                            .map(|m| m.as_str().to_string())
                            .unwrap_or_default();
                        if node_id.is_empty() {
                            diagnostics
                                .push(format!("line {}: missing node id", lineno + 1));
                            skipped += 1;
                        } else {
                            let xid = caps
                                .name("xid")
                                .and_then(|m| m.as_str().parse::<u32>().ok())
                                .or(pattern.xid);
                            records.push(ErrorRecord {
                                timestamp,
                                node_id,
                                gpu_id: caps
                                    .name("pci")
                                    .map(|m| m.as_str().to_string())
                                    .unwrap_or_default(),
                                xid,
                                pattern_id: pattern.id.clone(),
                                message: normalize_message(
                                    caps.name("msg").map(|m| m.as_str()).unwrap_or_default(),
                                ),
                                category: pattern.category,
                            });
                            matched += 1;
                        }
                    }
                    Err(e) => {
                        diagnostics.push(format!("line {}: {e}", lineno + 1));
                        skipped += 1;
                    }
                }
                break;
            }
        }
        if !hit {
            skipped += 1;
        }
    }

    // Stable sort keeps original log order among equal timestamps.
    records.sort_by_key(|r| r.timestamp);
    Ok(ParseOutcome {
        records,
        matched,
        skipped,
        diagnostics,
    })
}

const MANDATORY_JOB_COLUMNS: &[&str] = &[
    "job_id", "start", "end", "nodes", "gpus", "exit", "status", "name", "modules",
];

/// Parse job accounting records from CSV with a header row.
///
/// `nodes` and `modules` cells hold `;`-separated lists. `submit` and
/// `zombie` columns are optional. Unparseable rows are skipped with a
/// diagnostic; a missing mandatory column is a configuration error.
pub fn parse_job_log<R: std::io::Read>(reader: R) -> Result<ParseOutcome<JobRecord>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::config(format!("cannot read job CSV header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut index = BTreeMap::new();
    for name in MANDATORY_JOB_COLUMNS {
        match col(name) {
            Some(i) => {
                index.insert(name.to_string(), i);
            }
            None => {
                return Err(Error::config(format!("job CSV missing column {name}")));
            }
        }
    }
    let submit_col = col("submit");
    let zombie_col = col("zombie");

    let mut records = Vec::new();
    let mut matched = 0usize;
    let mut skipped = 0usize;
    let mut diagnostics = Vec::new();

    for (rowno, row) in csv_reader.records().enumerate() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(format!("row {}: {e}", rowno + 1));
                skipped += 1;
                continue;
            }
        };
        let get = |name: &str| row.get(index[name]).unwrap_or_default();
        let parsed: Result<JobRecord> = (|| {
            let start = parse_timestamp(get("start"))?;
            let end = parse_timestamp(get("end"))?;
            if end < start {
                return Err(Error::data("end precedes start"));
            }
            let submit = match submit_col.and_then(|i| row.get(i)) {
                Some(s) if !s.is_empty() => parse_timestamp(s)?,
                _ => start,
            };
            let split_list = |s: &str| -> Vec<String> {
                s.split(';')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(String::from)
                    .collect()
            };
            Ok(JobRecord {
                job_id: get("job_id").to_string(),
                submit,
                start,
                end,
                node_ids: split_list(get("nodes")),
                gpu_count: get("gpus")
                    .parse()
                    .map_err(|e| Error::data(format!("bad gpu count: {e}")))?,
                exit_code: get("exit")
                    .parse()
                    .map_err(|e| Error::data(format!("bad exit code: {e}")))?,
                status: get("status").parse()?,
                name: get("name").to_string(),
                loaded_modules: split_list(get("modules")),
                zombie: zombie_col
                    .and_then(|i| row.get(i))
                    .map(|s| s == "1" || s.eq_ignore_ascii_case("true"))
                    .unwrap_or(false),
            })
        })();
        match parsed {
            Ok(job) => {
                records.push(job);
                matched += 1;
            }
            Err(e) => {
                diagnostics.push(format!("row {}: {e}", rowno + 1));
                skipped += 1;
            }
        }
    }

    records.sort_by_key(|j| j.end);
    Ok(ParseOutcome {
        records,
        matched,
        skipped,
        diagnostics,
    })
}

/// Default keyword list for ML job classification.
pub fn default_ml_keywords() -> Vec<String> {
    ["model", "train", "pytorch", "tensorflow", "torch", "keras", "jax", "horovod"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// True iff any keyword appears case-insensitively in the job name or its
/// loaded modules.
pub fn classify_ml(job: &JobRecord, keywords: &[String]) -> bool {
    let name = job.name.to_ascii_lowercase();
    keywords.iter().any(|k| {
        let k = k.to_ascii_lowercase();
        name.contains(&k)
            || job
                .loaded_modules
                .iter()
                .any(|m| m.to_ascii_lowercase().contains(&k))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn defaults() -> (ErrorTaxonomy, PatternSet) {
        let tax = ErrorTaxonomy::default_table();
        let pat = PatternSet::default_nvidia(&tax);
        (tax, pat)
    }

    #[test]
    fn parses_canonical_xid_line() {
        let (tax, pat) = defaults();
        let line = "2024-02-19T00:00:10Z node042 kernel: NVRM: Xid (PCI:0000:27:00): 48, pid=1234, Double Bit ECC Error at 0xdeadbeef\n";
        let out = parse_error_log(Cursor::new(line), &pat, &tax).unwrap();
        assert_eq!(out.matched, 1);
        assert_eq!(out.skipped, 0);
        let r = &out.records[0];
        assert_eq!(r.xid, Some(48));
        assert_eq!(r.category, Category::Memory);
        assert_eq!(r.node_id, "node042");
        assert_eq!(r.gpu_id, "0000:27:00");
        assert_eq!(r.message, "pid=*, Double Bit ECC Error at 0x*");
    }

    #[test]
    fn empty_input_yields_empty_outcome() {
        let (tax, pat) = defaults();
        let out = parse_error_log(Cursor::new(""), &pat, &tax).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.matched, 0);
        assert_eq!(out.skipped, 0);
    }

    #[test]
    fn matched_plus_skipped_equals_total() {
        let (tax, pat) = defaults();
        let text = "\
2024-02-19T00:00:10Z node1 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault
unrelated noise line
2024-02-19T00:00:12Z node1 kernel: NVRM: Xid (PCI:0000:07:00): 79, GPU has fallen off the bus
another noise line
";
        let out = parse_error_log(Cursor::new(text), &pat, &tax).unwrap();
        assert_eq!(out.matched, 2);
        assert_eq!(out.skipped, 2);
        assert_eq!(out.matched + out.skipped, 4);
    }

    #[test]
    fn malformed_timestamp_skips_line_with_diagnostic() {
        let (tax, pat) = defaults();
        let line = "not-a-time node1 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault\n";
        let out = parse_error_log(Cursor::new(line), &pat, &tax).unwrap();
        assert_eq!(out.matched, 0);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn invalid_regex_is_config_error() {
        let (tax, _) = defaults();
        let pat = PatternSet {
            patterns: vec![Pattern {
                id: "broken".into(),
                regex: "([unclosed".into(),
                xid: Some(31),
                category: Category::Hardware,
            }],
        };
        let err = parse_error_log(Cursor::new(""), &pat, &tax).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn parse_is_deterministic() {
        let (tax, pat) = defaults();
        let text = "\
2024-02-19T00:00:10Z node1 kernel: NVRM: Xid (PCI:0000:07:00): 31, MMU fault
2024-02-19T00:00:10Z node2 kernel: NVRM: Xid (PCI:0000:27:00): 74, NVLink error
";
        let a = parse_error_log(Cursor::new(text), &pat, &tax).unwrap();
        let b = parse_error_log(Cursor::new(text), &pat, &tax).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn job_csv_roundtrip_and_sorting() {
        let csv = "\
job_id,start,end,nodes,gpus,exit,status,name,modules
j2,100,400,node1;node2,8,0,COMPLETED,wrf_sim,netcdf;mpi
j1,100,200,node1,2,1,FAILED,train_llama_7b,cuda;pytorch
";
        let out = parse_job_log(Cursor::new(csv)).unwrap();
        assert_eq!(out.matched, 2);
        assert_eq!(out.records[0].job_id, "j1"); // sorted by end time
        assert_eq!(out.records[0].status, JobStatus::Failed);
        assert_eq!(out.records[1].node_ids, vec!["node1", "node2"]);
    }

    #[test]
    fn job_row_with_end_before_start_skipped() {
        let csv = "\
job_id,start,end,nodes,gpus,exit,status,name,modules
j1,500,200,node1,2,1,FAILED,bad,cuda
";
        let out = parse_job_log(Cursor::new(csv)).unwrap();
        assert_eq!(out.matched, 0);
        assert_eq!(out.skipped, 1);
        assert!(!out.diagnostics.is_empty());
    }

    #[test]
    fn missing_mandatory_column_is_config_error() {
        let csv = "job_id,start,end,nodes,gpus,exit,status,name\nj1,1,2,n,1,0,FAILED,x\n";
        assert!(matches!(
            parse_job_log(Cursor::new(csv)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ml_classification() {
        let mut job = JobRecord {
            job_id: "j".into(),
            submit: 0,
            start: 0,
            end: 10,
            node_ids: vec!["n".into()],
            gpu_count: 1,
            exit_code: 0,
            status: JobStatus::Completed,
            name: "train_llama_7b".into(),
            loaded_modules: vec![],
            zombie: false,
        };
        let kw = default_ml_keywords();
        assert!(classify_ml(&job, &kw));
        job.name = "namd_md_run".into();
        job.loaded_modules = vec!["cuda".into()];
        assert!(!classify_ml(&job, &kw));
        job.loaded_modules = vec!["pytorch".into()];
        assert!(classify_ml(&job, &kw));
    }

    #[test]
    fn fleet_presets_validate() {
        assert!(FleetConfig::a100().validate().is_ok());
        assert!(FleetConfig::h100().validate().is_ok());
        let mut bad = FleetConfig::a100();
        bad.observation_hours = 0.0;
        assert!(bad.validate().is_err());
    }
}
