use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::numeric::LOG_CLAMP;

/// Training hyperparameters. Serialized as flat `key=value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_docs: usize,
    pub lr: f64,
    pub seed: u64,
    pub d_in: usize,
    pub d_h: usize,
    pub graph: GraphConfig,
    pub log_clamp: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_docs: 8,
            lr: 1e-4,
            seed: 0,
            d_in: 64,
            d_h: 64,
            graph: GraphConfig::default(),
            log_clamp: LOG_CLAMP,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_docs == 0 || self.d_in == 0 || self.d_h == 0 {
            return Err(Error::Config(
                "epochs, batch_docs, d_in and d_h must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.log_clamp > 0.0 && self.log_clamp < 0.5) {
            return Err(Error::Config(format!(
                "log_clamp must lie in (0, 0.5), got {}",
                self.log_clamp
            )));
        }
        Ok(())
    }

    /// Sets one key. `batch` is accepted for `batch_docs`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "epochs" => self.epochs = parse(key, value)?,
            "batch_docs" | "batch" => self.batch_docs = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "d_in" => self.d_in = parse(key, value)?,
            "d_h" => self.d_h = parse(key, value)?,
            "use_csk" => self.graph.use_csk = parse(key, value)?,
            "use_global" => self.graph.use_global = parse(key, value)?,
            "merge_csk_relations" => self.graph.merge_csk_relations = parse(key, value)?,
            "log_clamp" => self.log_clamp = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Every key, one per line; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "batch_docs={}", self.batch_docs);
        let _ = writeln!(s, "lr={}", self.lr);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "d_in={}", self.d_in);
        let _ = writeln!(s, "d_h={}", self.d_h);
        let _ = writeln!(s, "use_csk={}", self.graph.use_csk);
        let _ = writeln!(s, "use_global={}", self.graph.use_global);
        let _ = writeln!(s, "merge_csk_relations={}", self.graph.merge_csk_relations);
        let _ = writeln!(s, "log_clamp={}", self.log_clamp);
        s
    }
}
