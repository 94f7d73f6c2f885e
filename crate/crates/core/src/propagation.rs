//! Mining of intra-GPU and inter-GPU error propagation edges with
//! probabilities and propagation times, plus graph emission.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coalesce::{AnalysisParams, CoalescedError};
use crate::error::{Error, Result};
use crate::taxonomy::{Category, ErrorTaxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Source and target on the same GPU device.
    IntraGpu,
    /// Source and target on distinct GPUs of the same node.
    InterGpu,
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scope::IntraGpu => "intra_gpu",
            Scope::InterGpu => "inter_gpu",
        })
    }
}

/// Distribution summary of per-instance propagation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    pub min: i64,
    pub max: i64,
    pub mean: f64,
}

impl DistSummary {
    fn from_samples(samples: &[i64]) -> Self {
        let min = *samples.iter().min().unwrap_or(&0);
        let max = *samples.iter().max().unwrap_or(&0);
        let mean = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<i64>() as f64 / samples.len() as f64
        };
        DistSummary { min, max, mean }
    }
}

/// A (source error -> target error) edge with probability and timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationEdge {
    pub source_type: String,
    pub target_type: String,
    pub scope: Scope,
    pub count: u64,
    /// count / total source occurrences.
    pub probability: f64,
    pub mean_propagation_time: f64,
    pub propagation_times: DistSummary,
}

/// A source type's occurrences with no successor within the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminalMark {
    pub source_type: String,
    pub terminal_count: u64,
    pub terminal_probability: f64,
}

fn type_of<'a>(taxonomy: &'a ErrorTaxonomy, c: &'a CoalescedError) -> &'a str {
    c.representative
        .xid
        .and_then(|x| taxonomy.label_for_xid(x))
        .unwrap_or(c.representative.pattern_id.as_str())
}

/// Mine propagation edges with first-successor semantics.
///
/// For each source occurrence, the immediate next qualifying error within
/// `delta_t` creates one edge instance; otherwise the occurrence is
/// terminal. Probabilities are normalized per source type, so for every
/// source type the terminal probability plus edge probabilities sum to 1.
/// Events without a GPU identity are skipped entirely (they cannot be
/// scoped to a device).
pub fn build_edges(
    coalesced: &[CoalescedError],
    params: &AnalysisParams,
    scope: Scope,
    taxonomy: &ErrorTaxonomy,
) -> Result<(Vec<PropagationEdge>, Vec<TerminalMark>)> {
    if coalesced.windows(2).any(|w| w[1].start < w[0].start) {
        return Err(Error::data("coalesced events must be sorted by start time"));
    }

    let qualifies = |a: &CoalescedError, b: &CoalescedError| -> bool {
        if a.representative.node_id != b.representative.node_id {
            return false;
        }
        match scope {
            Scope::IntraGpu => a.representative.gpu_id == b.representative.gpu_id,
            Scope::InterGpu => a.representative.gpu_id != b.representative.gpu_id,
        }
    };

    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut terminal_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut instances: BTreeMap<(String, String), Vec<i64>> = BTreeMap::new();

    for (i, source) in coalesced.iter().enumerate() {
        if source.representative.gpu_id.is_empty() {
            continue;
        }
        let src_type = type_of(taxonomy, source).to_string();
        *totals.entry(src_type.clone()).or_insert(0) += 1;

        let mut successor: Option<(&CoalescedError, i64)> = None;
        for target in coalesced.iter().skip(i + 1) {
            let gap = target.start - source.start;
            if gap > params.delta_t {
                break;
            }
            if target.representative.gpu_id.is_empty() {
                continue;
            }
            if qualifies(source, target) {
                successor = Some((target, gap));
                break;
            }
        }
        match successor {
            Some((target, gap)) => {
                let dst_type = type_of(taxonomy, target).to_string();
                instances.entry((src_type, dst_type)).or_default().push(gap);
            }
            None => {
                *terminal_counts.entry(src_type).or_insert(0) += 1;
            }
        }
    }

    let edges = instances
        .into_iter()
        .map(|((source_type, target_type), gaps)| {
            let total = totals[&source_type];
            let summary = DistSummary::from_samples(&gaps);
            PropagationEdge {
                source_type,
                target_type,
                scope,
                count: gaps.len() as u64,
                probability: gaps.len() as f64 / total as f64,
                mean_propagation_time: summary.mean,
                propagation_times: summary,
            }
        })
        .collect();

    let terminals = totals
        .iter()
        .map(|(source_type, total)| {
            let terminal_count = terminal_counts.get(source_type).copied().unwrap_or(0);
            TerminalMark {
                source_type: source_type.clone(),
                terminal_count,
                terminal_probability: terminal_count as f64 / *total as f64,
            }
        })
        .collect();

    Ok((edges, terminals))
}

/// Fractions of interconnect errors co-occurring on two or more (and three
/// or more) GPUs of the same node within the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiGpuInvolvement {
    pub interconnect_errors: u64,
    pub fraction_ge2_gpus: f64,
    pub fraction_ge3_gpus: f64,
}

pub fn multi_gpu_involvement(
    coalesced: &[CoalescedError],
    params: &AnalysisParams,
) -> MultiGpuInvolvement {
    // Cluster interconnect errors per node by time adjacency, then count the
    // distinct GPUs each cluster touches.
    let mut per_node: BTreeMap<&str, Vec<&CoalescedError>> = BTreeMap::new();
    for c in coalesced {
        if c.representative.category == Category::Interconnect
            && !c.representative.gpu_id.is_empty()
        {
            per_node
                .entry(c.representative.node_id.as_str())
                .or_default()
                .push(c);
        }
    }

    let mut total = 0u64;
    let mut in_ge2 = 0u64;
    let mut in_ge3 = 0u64;
    for events in per_node.values() {
        let mut i = 0usize;
        while i < events.len() {
            let mut latest = events[i].start;
            let mut gpus: BTreeSet<&str> = BTreeSet::new();
            gpus.insert(events[i].representative.gpu_id.as_str());
            let mut size = 1u64;
            let mut j = i + 1;
            while j < events.len() && events[j].start - latest <= params.delta_t {
                latest = events[j].start;
                gpus.insert(events[j].representative.gpu_id.as_str());
                size += 1;
                j += 1;
            }
            total += size;
            if gpus.len() >= 2 {
                in_ge2 += size;
            }
            if gpus.len() >= 3 {
                in_ge3 += size;
            }
            i = j;
        }
    }

    MultiGpuInvolvement {
        interconnect_errors: total,
        fraction_ge2_gpus: if total == 0 { 0.0 } else { in_ge2 as f64 / total as f64 },
        fraction_ge3_gpus: if total == 0 { 0.0 } else { in_ge3 as f64 / total as f64 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::usage(format!("unknown graph format: {other}"))),
        }
    }
}

/// Render the propagation graph with deterministic node and edge ordering.
/// Edge labels read "probability / mean time"; terminal states are sinks.
pub fn emit_graph(
    edges: &[PropagationEdge],
    terminals: &[TerminalMark],
    format: GraphFormat,
) -> Result<String> {
    let mut nodes: BTreeSet<&str> = BTreeSet::new();
    for e in edges {
        nodes.insert(&e.source_type);
        nodes.insert(&e.target_type);
    }
    for t in terminals {
        nodes.insert(&t.source_type);
    }

    let mut sorted_edges: Vec<&PropagationEdge> = edges.iter().collect();
    sorted_edges.sort_by(|a, b| {
        (&a.source_type, &a.target_type).cmp(&(&b.source_type, &b.target_type))
    });

    match format {
        GraphFormat::Dot => {
            let mut out = String::from("digraph propagation {\n  rankdir=LR;\n");
            for node in &nodes {
                out.push_str(&format!("  \"{node}\";\n"));
            }
            for t in terminals {
                if t.terminal_count > 0 {
                    out.push_str(&format!(
                        "  \"{}_terminal\" [shape=doublecircle, label=\"terminal\"];\n",
                        t.source_type
                    ));
                }
            }
            for e in &sorted_edges {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [label=\"{:.2} / {:.1}s\"];\n",
                    e.source_type, e.target_type, e.probability, e.mean_propagation_time
                ));
            }
            let mut sorted_terminals: Vec<&TerminalMark> = terminals.iter().collect();
            sorted_terminals.sort_by(|a, b| a.source_type.cmp(&b.source_type));
            for t in sorted_terminals {
                if t.terminal_count > 0 {
                    out.push_str(&format!(
                        "  \"{}\" -> \"{}_terminal\" [label=\"{:.2}\"];\n",
                        t.source_type, t.source_type, t.terminal_probability
                    ));
                }
            }
            out.push_str("}\n");
            Ok(out)
        }
        GraphFormat::Json => {
            #[derive(Serialize)]
            struct Adjacency<'a> {
                nodes: Vec<&'a str>,
                edges: Vec<&'a PropagationEdge>,
                terminals: Vec<&'a TerminalMark>,
            }
            let mut sorted_terminals: Vec<&TerminalMark> = terminals.iter().collect();
            sorted_terminals.sort_by(|a, b| a.source_type.cmp(&b.source_type));
            let doc = Adjacency {
                nodes: nodes.into_iter().collect(),
                edges: sorted_edges,
                terminals: sorted_terminals,
            };
            Ok(serde_json::to_string_pretty(&doc)?)
        }
    }
}
