//! The single JSON configuration document shared by every subcommand.
//!
//! All keys live at the top level and every one of them is optional:
//! `lambda_count`, `lambda_span`, `lambda_type`, `lambda_ground`,
//! `lambda_entail`, `sigma`, `format_penalty` configure rewards;
//! `min_std`, `min_max`, `median_low`, `median_high` the group filter;
//! `eps_low`, `eps_high` the clip band; `iou_threshold` and `strict_io`
//! the evaluation and ingestion behavior. Flags override config values,
//! which override the built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use gmner_core::{ClipConfig, FilterThresholds, RewardConfig, DEFAULT_IOU_THRESHOLD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliConfig {
    #[serde(flatten)]
    pub reward: RewardConfig,
    #[serde(flatten)]
    pub filter: FilterThresholds,
    #[serde(flatten)]
    pub clip: ClipConfig,
    #[serde(default = "default_iou_threshold")]
    pub iou_threshold: f64,
    #[serde(default = "default_strict_io")]
    pub strict_io: bool,
}

fn default_iou_threshold() -> f64 {
    DEFAULT_IOU_THRESHOLD
}

fn default_strict_io() -> bool {
    true
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            filter: FilterThresholds::default(),
            clip: ClipConfig::default(),
            iou_threshold: default_iou_threshold(),
            strict_io: default_strict_io(),
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<CliConfig> {
        let config = match path {
            None => CliConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate().context("invalid reward config")?;
        self.filter
            .validate()
            .context("invalid filter thresholds")?;
        self.clip.validate().context("invalid clip config")?;
        anyhow::ensure!(
            self.iou_threshold > 0.0 && self.iou_threshold <= 1.0,
            "iou_threshold must lie in (0, 1], got {}",
            self.iou_threshold
        );
        Ok(())
    }
}
