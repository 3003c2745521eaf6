//! Plain-text `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Lists are
//! comma-separated. Every subcommand declares which keys it accepts and which
//! it requires; anything else is rejected.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use hartree::{HartreeMode, ModelParams};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

/// Accepted and required keys of one subcommand.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
}

impl KeySpec {
    pub fn accepts(&self, key: &str) -> bool {
        self.required.contains(&key) || self.optional.contains(&key) || COMMON_KEYS.contains(&key)
    }
}

/// Keys every subcommand accepts.
pub const COMMON_KEYS: &[&str] = &["rng_seed", "output_dir"];

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(config_err(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: impl AsRef<Path>) -> LabResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {path:?}: {e}")))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Rejects unknown keys and reports every missing required key.
    pub fn validate(&self, spec: &KeySpec) -> LabResult<()> {
        let unknown: Vec<&str> = self.keys().filter(|k| !spec.accepts(k)).collect();
        if !unknown.is_empty() {
            return Err(config_err(format!("unknown keys: {}", unknown.join(", "))));
        }
        self.require(spec.required)
    }

    pub fn require(&self, keys: &[&str]) -> LabResult<()> {
        let missing: Vec<&str> = keys.iter().copied().filter(|k| !self.contains(k)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(config_err(format!("missing required keys: {}", missing.join(", "))))
        }
    }

    fn raw(&self, key: &str) -> LabResult<&str> {
        self.entries.get(key).map(String::as_str).ok_or_else(|| config_err(format!("missing key {key:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> LabResult<T> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| config_err(format!("key {key:?}: cannot parse {raw:?}")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> LabResult<T> {
        if self.contains(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> LabResult<Vec<T>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| config_err(format!("key {key:?}: cannot parse list item {s:?}"))))
            .collect()
    }

    pub fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> LabResult<Vec<T>> {
        if self.contains(key) {
            self.list(key)
        } else {
            Ok(default.to_vec())
        }
    }

    /// `D`, `p`, `omega` with `D = 3` and `omega = 1` as defaults.
    pub fn model(&self) -> LabResult<ModelParams> {
        let d: u32 = self.get_or("D", 3)?;
        let p: f64 = self.get("p")?;
        let omega: f64 = self.get_or("omega", 1.0)?;
        if !(omega > 0.0) {
            return Err(config_err(format!("omega = {omega} must be positive")));
        }
        ModelParams::new(d, p, omega).map_err(|e| config_err(e.to_string()))
    }

    pub fn grid(&self) -> LabResult<hartree::GridSpec> {
        hartree::GridSpec::new(self.get("n")?, self.get("L")?).map_err(|e| config_err(e.to_string()))
    }

    pub fn hartree_mode(&self) -> LabResult<HartreeMode> {
        match self.get_or("hartree_mode", "truncated".to_string())?.as_str() {
            "truncated" => Ok(HartreeMode::Truncated),
            "periodic" => Ok(HartreeMode::Periodic),
            other => Err(config_err(format!("hartree_mode must be truncated or periodic, got {other:?}"))),
        }
    }
}
