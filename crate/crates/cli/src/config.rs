//! Flat key-value config file support. Keys mirror the long flag names
//! (`alpha`, `nu-list`, `sde-dt`, ...); precedence is CLI flag > config file
//! > built-in default.

use std::path::Path;

use logeuler::{Error, Result};

pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            table: toml::Table::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("unreadable config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("malformed config {}: {e}", path.display())))?;
        for (key, value) in &table {
            if value.is_table() || value.is_array() {
                return Err(Error::Config(format!(
                    "config must be flat key = value pairs; '{key}' is nested"
                )));
            }
        }
        Ok(FileConfig { table })
    }

    fn value(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| Error::Config(format!("config key '{key}' must be a number"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|i| *i >= 0)
                .map(|i| Some(i as usize))
                .ok_or_else(|| {
                    Error::Config(format!("config key '{key}' must be a nonnegative integer"))
                }),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|i| *i >= 0)
                .map(|i| Some(i as u64))
                .ok_or_else(|| {
                    Error::Config(format!("config key '{key}' must be a nonnegative integer"))
                }),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Error::Config(format!("config key '{key}' must be a string"))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_bool()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("config key '{key}' must be a boolean"))),
        }
    }
}

/// Parse a comma-separated list of viscosities.
pub fn parse_nu_list(text: &str) -> Result<Vec<f64>> {
    let list: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let list =
        list.map_err(|e| Error::Config(format!("bad viscosity list '{text}': {e}")))?;
    if list.is_empty() {
        return Err(Error::Config("viscosity list is empty".into()));
    }
    Ok(list)
}
