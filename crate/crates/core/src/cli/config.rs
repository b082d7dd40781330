use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::usage;

/// Flat JSON object keyed by long flag names (`"density-a": 0.05`).
#[derive(Debug, Default)]
pub struct Config(Map<String, Value>);

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => Ok(Config(map)),
            Ok(_) => Err(usage(format!("config {} must hold a JSON object", path.display()))),
            Err(e) => Err(usage(format!("config {}: {e}", path.display()))),
        }
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| usage(format!("config key `{key}`: {e}"))),
        }
    }

    /// Flag, else config, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup(key),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.pick_opt(flag, key)?
            .ok_or_else(|| usage(format!("--{key} is required (flag or config key)")))
    }

    /// A switch is on when given on the command line or set `true` in config.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.lookup::<bool>(key)?.unwrap_or(false))
    }
}
