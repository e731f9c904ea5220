//! One TOML document drives every command: `[layout]`, `[scenario]`,
//! `[radio]`, `[pool]`, `[train]`, `[eval]` sections plus the top-level
//! codebook size. Sections are mandatory (a missing one is named in the
//! error); keys inside a section fall back to defaults. Individual keys
//! can be overridden from the command line with `section.key=value`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::beams::PoolConfig;
use crate::error::{Error, Result};
use crate::propagation::RadioConfig;
use crate::scenario::{ScenarioConfig, SiteLayout};

/// Evaluation-protocol knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub num_instances: usize,
    /// First held-out instance seed; instance i uses `seed_start + i`.
    pub seed_start: u64,
    /// Comma-separated method list, or `all`.
    pub methods: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            num_instances: 200,
            seed_start: 5_000_000,
            methods: "all".into(),
        }
    }
}

/// The complete experiment bundle. Sections are required; keys inside a
/// section default individually.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Beams deployed per sector during one sweep.
    #[serde(default = "default_codebook_size")]
    pub codebook_size: usize,
    pub layout: SiteLayout,
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub pool: PoolConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

fn default_codebook_size() -> usize {
    24
}

impl ExperimentConfig {
    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }
    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }
    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }
    pub fn pool(&self) -> &PoolConfig {
        &self.pool
    }
    pub fn train(&self) -> &TrainConfig {
        &self.train
    }

    pub fn validate(&self) -> Result<()> {
        self.layout().validate()?;
        self.scenario().validate()?;
        self.radio().validate()?;
        self.train().validate()?;
        if self.codebook_size == 0 || self.codebook_size > self.pool().total_beams {
            return Err(Error::Config(format!(
                "codebook_size {} must lie in 1..={}",
                self.codebook_size,
                self.pool().total_beams
            )));
        }
        Ok(())
    }

    /// Parse a TOML document, applying `section.key=value` overrides
    /// before deserialization.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config parse: {e}")))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// A ready-to-edit document with every default spelled out.
    pub fn default_document() -> String {
        let cfg = ExperimentConfig {
            codebook_size: default_codebook_size(),
            layout: SiteLayout::default(),
            scenario: ScenarioConfig::default(),
            radio: RadioConfig::default(),
            pool: PoolConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        };
        toml::to_string_pretty(&cfg).expect("defaults serialize")
    }
}

/// Apply one `path.to.key=value` override onto a parsed table. The value
/// is interpreted as TOML; unparseable values fall back to strings.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' must look like section.key=value")))?;
    let value: toml::Value = match format!("x = {raw_value}").parse::<toml::Table>() {
        Ok(t) => t["x"].clone(),
        Err(_) => toml::Value::String(raw_value.trim().to_string()),
    };

    let parts: Vec<&str> = path.trim().split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override path '{path}'")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-table")))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
