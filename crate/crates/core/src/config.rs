//! Pipeline configuration: fleets, pattern registry, taxonomy, and
//! analysis defaults, loadable from a single TOML file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FleetConfig, Pattern, PatternSet};
use crate::taxonomy::{ErrorTaxonomy, TaxonomyEntry};

/// Everything the pipeline needs for one invocation.
///
/// All defaults are built in; a config file only overrides what it names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Coalescing / propagation window, seconds.
    pub delta_t: i64,
    /// Job-failure attribution window, seconds.
    pub window: i64,
    /// Named fleets selectable with `--fleet`.
    pub fleet: BTreeMap<String, FleetConfig>,
    /// Pattern registry override; empty means built-in defaults.
    #[serde(rename = "pattern")]
    pub patterns: Vec<Pattern>,
    /// Taxonomy override; empty means the built-in table.
    #[serde(rename = "taxonomy")]
    pub taxonomy_entries: Vec<TaxonomyEntry>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut fleet = BTreeMap::new();
        fleet.insert("a100".to_string(), FleetConfig::a100());
        fleet.insert("h100".to_string(), FleetConfig::h100());
        PipelineConfig {
            delta_t: 5,
            window: 20,
            fleet,
            patterns: Vec::new(),
            taxonomy_entries: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        // Named fleets from defaults stay available unless shadowed.
        let defaults = PipelineConfig::default();
        for (name, fleet) in defaults.fleet {
            cfg.fleet.entry(name).or_insert(fleet);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_t <= 0 {
            return Err(Error::config("delta_t must be positive"));
        }
        if self.window <= 0 {
            return Err(Error::config("window must be positive"));
        }
        for fleet in self.fleet.values() {
            fleet.validate()?;
        }
        let taxonomy = self.taxonomy()?;
        self.pattern_set(&taxonomy)?.validate(&taxonomy)?;
        Ok(())
    }

    pub fn taxonomy(&self) -> Result<ErrorTaxonomy> {
        if self.taxonomy_entries.is_empty() {
            Ok(ErrorTaxonomy::default_table())
        } else {
            ErrorTaxonomy::from_entries(self.taxonomy_entries.clone())
        }
    }

    pub fn pattern_set(&self, taxonomy: &ErrorTaxonomy) -> Result<PatternSet> {
        if self.patterns.is_empty() {
            Ok(PatternSet::default_nvidia(taxonomy))
        } else {
            Ok(PatternSet {
                patterns: self.patterns.clone(),
            })
        }
    }

    pub fn select_fleet(&self, name: &str) -> Result<&FleetConfig> {
        self.fleet
            .get(name)
            .ok_or_else(|| Error::config(format!("unknown fleet {name}")))
    }
}
