use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trace::BehaviorModel;
use super::HarnessError;
use crate::alloc::{QoeParams, RateBounds};
use crate::popularity::TrainConfig;
use crate::stream::StreamConfig;

/// Allocation scheme compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// QoE-maximizing allocation driven by carryover for constant views and
    /// the network for switching views.
    Adaptive,
    /// QoE-maximizing allocation driven by carryover alone.
    PpcOnly,
    /// QoE-maximizing allocation driven by the network alone.
    GnnOnly,
    /// Equal rate for every representation.
    Uniform,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Adaptive, Scheme::GnnOnly, Scheme::PpcOnly, Scheme::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Adaptive => "adaptive",
            Scheme::PpcOnly => "ppc-only",
            Scheme::GnnOnly => "gnn-only",
            Scheme::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// Target rate per view in Mbit/s, shared by both representations of the view.
    pub mbps_per_view: f64,
    /// Chunks over which over- or under-spending is paid back.
    pub sliding_window: u32,
    /// Rate bounds as multiples of the fair share of one representation.
    pub min_share: f64,
    pub max_share: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            mbps_per_view: 10.0,
            sliding_window: 4,
            min_share: 0.1,
            max_share: 4.0,
        }
    }
}

impl BudgetConfig {
    /// Mbit per chunk for all representations together.
    pub fn r_avg(&self, stream: &StreamConfig) -> f64 {
        self.mbps_per_view * stream.n_views as f64 * stream.chunk_seconds
    }

    pub fn bounds(&self, stream: &StreamConfig) -> RateBounds {
        let fair = self.r_avg(stream) / (2 * stream.n_views) as f64;
        RateBounds {
            r_min: self.min_share * fair,
            r_max: self.max_share * fair,
            r_hat_min: self.min_share * fair,
            r_hat_max: self.max_share * fair,
        }
    }
}

/// Everything a closed-loop run needs. Loaded from TOML; every table and
/// key is optional and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub users: usize,
    pub chunks: u64,
    /// Trace CSV to replay instead of generating traces from `behavior`.
    pub trace_file: Option<PathBuf>,
    /// View adjacency edge list; a path graph over the views when absent.
    pub graph_file: Option<PathBuf>,
    pub schemes: Vec<Scheme>,
    /// Chunks of measured history before the networks are first trained;
    /// `gnn.tau` when absent.
    pub train_after: Option<usize>,
    /// One optimizer step per chunk after the initial training.
    pub online_updates: bool,
    /// Where undecodable streams are dumped before the run aborts.
    pub dump_dir: Option<PathBuf>,
    pub stream: StreamConfig,
    pub behavior: BehaviorModel,
    pub budget: BudgetConfig,
    pub qoe: QoeParams,
    pub gnn: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            users: 500,
            chunks: 60,
            trace_file: None,
            graph_file: None,
            schemes: Scheme::ALL.to_vec(),
            train_after: None,
            online_updates: true,
            dump_dir: None,
            stream: StreamConfig::default(),
            behavior: BehaviorModel::default(),
            budget: BudgetConfig::default(),
            qoe: QoeParams::default(),
            gnn: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.stream.validate()?;
        self.qoe.validate()?;
        self.gnn.validate()?;
        self.behavior.validate(self.stream.n_views)?;
        if self.users == 0 && self.trace_file.is_none() {
            return Err(HarnessError::Config("users must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("at least one scheme is required".into()));
        }
        let b = &self.budget;
        if !(b.mbps_per_view > 0.0 && b.min_share > 0.0 && b.min_share <= 1.0 && b.max_share >= 1.0) {
            return Err(HarnessError::Config(
                "budget needs mbps_per_view > 0 and 0 < min_share <= 1 <= max_share".into(),
            ));
        }
        if self.train_after.is_some_and(|t| t < self.gnn.tau.max(self.gnn.horizon + 1)) {
            return Err(HarnessError::Config(format!(
                "train_after must be at least {}",
                self.gnn.tau.max(self.gnn.horizon + 1)
            )));
        }
        Ok(())
    }

    pub fn train_after(&self) -> usize {
        self.train_after.unwrap_or(self.gnn.tau.max(self.gnn.horizon + 1))
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is absent, then `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Sets a dotted key, e.g. `budget.mbps_per_view=20`. The value is read as a
/// TOML literal, or as a bare string when it is not one.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override {assignment:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override {key:?}: {part} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
