//! XID error taxonomy: the catalogue of GPU error classes the toolkit
//! recognizes, their categories, and recovery semantics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Broad error category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Hardware,
    Memory,
    Interconnect,
    RecoveryEvent,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Category::Hardware => "hardware",
            Category::Memory => "memory",
            Category::Interconnect => "interconnect",
            Category::RecoveryEvent => "recovery-event",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardware" => Ok(Category::Hardware),
            "memory" => Ok(Category::Memory),
            "interconnect" => Ok(Category::Interconnect),
            "recovery-event" => Ok(Category::RecoveryEvent),
            other => Err(Error::config(format!("unknown category: {other}"))),
        }
    }
}

/// One row of the taxonomy: an XID-backed error class or an inferred label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub label: String,
    pub abbr: String,
    pub category: Category,
    pub description: String,
    pub recovery_action: String,
    pub requires_reset: bool,
    /// XID codes mapping to this label; empty for inferred labels.
    #[serde(default)]
    pub xids: Vec<u32>,
    /// Derived from other rows rather than counted from log lines.
    #[serde(default)]
    pub inferred: bool,
    /// Parsed but omitted from statistics unless explicitly included.
    #[serde(default)]
    pub excluded_by_default: bool,
}

/// Catalogue of error classes, keyed by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorTaxonomy {
    entries: BTreeMap<String, TaxonomyEntry>,
}

/// Labels every valid taxonomy must contain.
const REQUIRED_LABELS: &[&str] = &[
    "xid31",
    "xid48",
    "xid63",
    "xid64",
    "xid74",
    "xid79",
    "xid94",
    "xid95",
    "xid119_120",
    "xid122_123",
    "consecutive_sbe",
    "uncorrectable_ecc",
];

impl ErrorTaxonomy {
    pub fn from_entries(entries: Vec<TaxonomyEntry>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in entries {
            if map.insert(e.label.clone(), e).is_some() {
                return Err(Error::config("duplicate taxonomy label"));
            }
        }
        let tax = ErrorTaxonomy { entries: map };
        tax.validate()?;
        Ok(tax)
    }

    /// The built-in catalogue of critical GPU error classes.
    pub fn default_table() -> Self {
        let row = |label: &str,
                   abbr: &str,
                   category: Category,
                   description: &str,
                   recovery_action: &str,
                   requires_reset: bool,
                   xids: &[u32]| TaxonomyEntry {
            label: label.to_string(),
            abbr: abbr.to_string(),
            category,
            description: description.to_string(),
            recovery_action: recovery_action.to_string(),
            requires_reset,
            xids: xids.to_vec(),
            inferred: false,
            excluded_by_default: false,
        };

        let mut entries = vec![
            row(
                "xid31",
                "MMU Error",
                Category::Hardware,
                "GPU memory management unit (MMU) error",
                "Invalid memory access or driver/hardware bug; application-level handling",
                false,
                &[31],
            ),
            row(
                "xid48",
                "DBE",
                Category::Memory,
                "Double bit ECC memory error",
                "Triggers row remapping; GPU reset or node reboot needed",
                true,
                &[48],
            ),
            row(
                "xid63",
                "RRE",
                Category::Memory,
                "Row remapping event triggered by an uncorrectable memory error",
                "GPU reset needed for row remapping",
                true,
                &[63],
            ),
            row(
                "xid64",
                "RRF",
                Category::Memory,
                "Row remapping failure",
                "GPU reset needed",
                true,
                &[64],
            ),
            row(
                "xid74",
                "NVLink Error",
                Category::Interconnect,
                "NVLink connection issue between GPUs",
                "GPU reset or operator intervention",
                true,
                &[74],
            ),
            row(
                "xid79",
                "Fallen Off Bus",
                Category::Hardware,
                "GPU has fallen off the system bus and is unreachable",
                "GPU reset or operator intervention",
                true,
                &[79],
            ),
            row(
                "xid94",
                "Contained Memory Error",
                Category::Memory,
                "Uncorrectable contained ECC error (containment succeeded)",
                "Not specified",
                false,
                &[94],
            ),
            row(
                "xid95",
                "Uncontained Memory Error",
                Category::Memory,
                "Uncontained memory error (containment failed)",
                "GPU reset or operator intervention",
                true,
                &[95],
            ),
            row(
                "xid119_120",
                "GSP Error",
                Category::Hardware,
                "GPU System Processor (GSP) RPC timeout or error",
                "GPU reset or operator intervention",
                true,
                &[119, 120],
            ),
            row(
                "xid122_123",
                "PMU SPI Error",
                Category::Hardware,
                "PMU SPI read/write failure",
                "Not specified",
                false,
                &[122, 123],
            ),
        ];

        let mut inferred = |label: &str, abbr: &str, description: &str| {
            let mut e = row(
                label,
                abbr,
                Category::Memory,
                description,
                "Triggers row remapping; GPU reset or node reboot needed",
                true,
                &[],
            );
            e.inferred = true;
            entries.push(e);
        };
        inferred(
            "consecutive_sbe",
            "Consecutive SBEs",
            "Consecutive single-bit ECC errors at the same address",
        );
        inferred(
            "uncorrectable_ecc",
            "Uncorrectable ECC",
            "Uncorrectable ECC memory error (consecutive SBEs or a DBE)",
        );

        // Application-induced XIDs: parsed but excluded from statistics by default.
        let mut excluded = |label: &str, abbr: &str, description: &str, xids: &[u32]| {
            let mut e = row(
                label,
                abbr,
                Category::Hardware,
                description,
                "Application-level; no node recovery required",
                false,
                xids,
            );
            e.excluded_by_default = true;
            entries.push(e);
        };
        excluded("xid13", "Graphics Exception", "Graphics engine exception", &[13]);
        excluded("xid43", "App Stopped", "GPU stopped processing a user channel", &[43]);

        ErrorTaxonomy::from_entries(entries).expect("builtin taxonomy is valid")
    }

    pub fn validate(&self) -> Result<()> {
        for required in REQUIRED_LABELS {
            if !self.entries.contains_key(*required) {
                return Err(Error::config(format!(
                    "taxonomy is missing required entry {required}"
                )));
            }
        }
        let mut seen = BTreeMap::new();
        for e in self.entries.values() {
            for xid in &e.xids {
                if let Some(prev) = seen.insert(*xid, e.label.clone()) {
                    return Err(Error::config(format!(
                        "xid {xid} mapped by both {prev} and {}",
                        e.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = &TaxonomyEntry> {
        self.entries.values()
    }

    pub fn get(&self, label: &str) -> Option<&TaxonomyEntry> {
        self.entries.get(label)
    }

    /// Label owning the given XID code, if any.
    pub fn label_for_xid(&self, xid: u32) -> Option<&str> {
        self.entries
            .values()
            .find(|e| e.xids.contains(&xid))
            .map(|e| e.label.as_str())
    }

    pub fn is_excluded(&self, label: &str) -> bool {
        self.entries
            .get(label)
            .map(|e| e.excluded_by_default)
            .unwrap_or(false)
    }

    /// Non-inferred labels together with their XID codes.
    pub fn countable_labels(&self) -> impl Iterator<Item = &TaxonomyEntry> {
        self.entries.values().filter(|e| !e.inferred)
    }

    /// Canonical log message for a label, used by the synthetic generator
    /// and matched by the default pattern set.
    pub fn canonical_message(&self, label: &str) -> Option<String> {
        self.get(label).map(|e| format!("{} detected", e.description))
    }
}
