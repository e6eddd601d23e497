use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierKind;
use crate::nn::TrainConfig;
use crate::synth::{bundled_manifest_path, AugmentationConfig, RenderConfig};
use crate::verdict::DEFAULT_THRESHOLD;
use crate::{Error, Result, DIGITS};

/// Every setting of a pipeline run. Loaded from JSON (missing fields take
/// their defaults) and then overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Font registry manifest.
    pub registry: PathBuf,
    pub render: RenderConfig,
    pub augmentation: AugmentationConfig,
    pub train: TrainConfig,
    /// `c`, `cprime` or `char`.
    pub kind: String,
    /// Alphabet size.
    pub m: usize,
    /// Samples per (character, font bit) cell of a training set.
    pub per_cell_count: usize,
    /// Samples per character of a single-role test set.
    pub test_per_char_count: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Recall below which a class is always flagged by `verify`.
    pub force_below: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            registry: bundled_manifest_path(),
            render: RenderConfig::default(),
            augmentation: AugmentationConfig::default(),
            train: TrainConfig { epochs: 15, ..TrainConfig::default() },
            kind: "c".into(),
            m: DIGITS,
            per_cell_count: 400,
            test_per_char_count: 100,
            seed: 1,
            threshold: DEFAULT_THRESHOLD,
            force_below: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        if cfg.registry.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.registry = dir.join(&cfg.registry);
            }
        }
        Ok(cfg)
    }

    /// Defaults, or the file at `path` when given.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn classifier_kind(&self) -> Result<ClassifierKind> {
        ClassifierKind::parse(&self.kind, self.m)
    }

    pub fn validate(&self) -> Result<()> {
        self.render.validate()?;
        self.augmentation.validate()?;
        self.train.validate()?;
        self.classifier_kind()?;
        if self.m != DIGITS {
            return Err(Error::InvalidConfig(format!("only the {DIGITS} digits are supported, got M = {}", self.m)));
        }
        if self.per_cell_count == 0 || self.test_per_char_count == 0 {
            return Err(Error::InvalidConfig("sample counts must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!("threshold {} must lie in [0, 1)", self.threshold)));
        }
        if let Some(f) = self.force_below {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig(format!("force_below {f} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back: RunConfig = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"seed": 9, "train": {"learning_rate": 0.01, "momentum": 0.5, "batch_size": 8, "epochs": 2, "seed": 3, "lr_decay": 1.0}}"#).unwrap();
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.per_cell_count, RunConfig::default().per_cell_count);
    }

    #[test]
    fn out_of_range_threshold_rejected() {
        let cfg = RunConfig { threshold: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
