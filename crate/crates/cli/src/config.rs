//! Flat key=value configuration files mirroring the training and split
//! settings. Blank lines and `#` comments are ignored; unknown keys are
//! rejected so typos surface immediately.

use std::collections::BTreeMap;
use std::path::Path;

use seqtag::crf::{EarlyStopping, TrainConfig};
use seqtag::error::{Error, Result};
use seqtag::tags::Scheme;

const KNOWN_KEYS: [&str; 20] = [
    "epochs",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "weight_decay",
    "early_stopping",
    "patience",
    "seed",
    "k",
    "pca_dims",
    "mode",
    "embed_window",
    "embed_dim",
    "embed_shift",
    "lambda",
    "max_core",
    "max_context",
    "scheme",
    "constrained",
];

#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    values: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected key=value, got {line:?}"),
                });
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "unknown configuration key {key:?} (line {})",
                    i + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {raw:?} for key {key:?}"))),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let defaults = TrainConfig::default();
        Ok(TrainConfig {
            epochs: self.get("epochs", defaults.epochs)?,
            batch_size: self.get("batch_size", defaults.batch_size)?,
            learning_rate: self.get("learning_rate", defaults.learning_rate)?,
            beta1: self.get("beta1", defaults.beta1)?,
            beta2: self.get("beta2", defaults.beta2)?,
            weight_decay: self.get("weight_decay", defaults.weight_decay)?,
            early_stopping: match self.values.get("early_stopping") {
                None => defaults.early_stopping,
                Some(raw) => EarlyStopping::parse(raw)?,
            },
            patience: self.get("patience", defaults.patience)?,
            seed: self.get("seed", defaults.seed)?,
        })
    }

    pub fn scheme(&self) -> Result<Scheme> {
        match self.values.get("scheme") {
            None => Ok(Scheme::Biose),
            Some(raw) => Scheme::parse(raw),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key, default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key, default)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        self.get(key, default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_training_defaults() {
        let cfg = FlatConfig::parse("").unwrap().train_config().unwrap();
        let def = TrainConfig::default();
        assert_eq!(cfg.epochs, def.epochs);
        assert_eq!(cfg.batch_size, def.batch_size);
        assert_eq!(cfg.learning_rate, def.learning_rate);
        assert_eq!(cfg.patience, def.patience);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = FlatConfig::parse("# comment\nepochs=5\nearly_stopping=dev-f1\nseed=9\n")
            .unwrap()
            .train_config()
            .unwrap();
        assert_eq!(cfg.epochs, 5);
        assert_eq!(cfg.early_stopping, EarlyStopping::DevF1);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FlatConfig::parse("epochz=5\n").is_err());
        assert!(FlatConfig::parse("epochs 5\n").is_err());
        assert!(FlatConfig::parse("epochs=five\n")
            .unwrap()
            .train_config()
            .is_err());
    }
}
