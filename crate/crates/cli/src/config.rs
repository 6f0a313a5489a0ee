//! Run configuration files: a preset name, an overlay of training keys on
//! top of that preset, the dataset location and renderer options.
//!
//! ```toml
//! version = 1
//! preset = "desk"
//!
//! [data]
//! dir = "data/checker"
//! stride = 2
//!
//! [train]
//! iterations = 5000
//! weights = { lambda_s = 0.5 }
//!
//! [render]
//! clamp_to_box = true
//! ```

use std::path::{Path, PathBuf};

use nelf_core::renderer::RenderOptions;
use nelf_core::trainer::{Ablation, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub preset: String,
    pub data: DataSection,
    /// Keys of the training configuration that replace the preset's values.
    pub train: toml::Table,
    pub render: RenderSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            preset: "desk".into(),
            data: DataSection::default(),
            train: toml::Table::new(),
            render: RenderSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Dataset directory or manifest file.
    pub dir: Option<PathBuf>,
    /// Train on every `stride`-th grid row and column; the rest is the test split.
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    pub clamp_to_box: bool,
    pub sentinel: [f32; 3],
}

impl Default for RenderSection {
    fn default() -> Self {
        let d = RenderOptions::default();
        Self {
            clamp_to_box: d.clamp_to_box,
            sentinel: d.sentinel,
        }
    }
}

impl RenderSection {
    pub fn options(&self) -> RenderOptions {
        RenderOptions {
            clamp_to_box: self.clamp_to_box,
            sentinel: self.sentinel,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            ));
        }
        Ok(cfg)
    }

    /// The preset with the `[train]` overlay applied and validated.
    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let base = TrainConfig::preset(&self.preset)
            .ok_or_else(|| CliError::Validation(format!("unknown preset `{}` (expected paper or desk)", self.preset)))?;
        overlay(base, &self.train)
    }
}

/// Replaces the keys of `base` named in `patch`, recursing into tables.
pub fn merge(base: &mut toml::Table, patch: &toml::Table) {
    for (key, value) in patch {
        match (base.get_mut(key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

pub fn overlay(base: TrainConfig, patch: &toml::Table) -> Result<TrainConfig, CliError> {
    let mut table = toml::Table::try_from(&base).expect("config serializes to a table");
    merge(&mut table, patch);
    let cfg: TrainConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("[train] {}", e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Command-line overrides of individual training keys.
#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub iterations: Option<u64>,
    pub batch_size: Option<usize>,
    pub lambda_s: Option<f64>,
    pub lambda_r: Option<f64>,
    pub theta_deg: Option<f64>,
    pub checkpoint_interval: Option<u64>,
    pub seeds: Option<[u64; 4]>,
    pub ablation: Option<Ablation>,
}

impl TrainOverrides {
    pub fn apply(&self, mut cfg: TrainConfig) -> Result<TrainConfig, CliError> {
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.lambda_s {
            cfg.weights.lambda_s = v;
        }
        if let Some(v) = self.lambda_r {
            cfg.weights.lambda_r = v;
        }
        if let Some(v) = self.theta_deg {
            cfg.bundle.theta_deg = v;
        }
        if let Some(v) = self.checkpoint_interval {
            cfg.checkpoint_interval = v;
        }
        if let Some(s) = self.seeds {
            cfg.seeds = nelf_core::trainer::Seeds::from_array(s);
        }
        if let Some(a) = self.ablation {
            cfg = cfg.with_ablation(a);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
