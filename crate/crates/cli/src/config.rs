//! Resolution of run configuration from defaults, an optional flat
//! `key = value` file, and command-line flags, in that order of precedence.
//! Unknown keys are rejected; the fully resolved map is echoed into every
//! output header.

use crate::CliError;
use std::collections::BTreeMap;
use std::path::Path;

pub struct Resolver {
    map: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(defaults: &[(&str, &str)]) -> Self {
        Resolver {
            map: defaults
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Apply a flat `key = value` file. Blank lines and lines starting with
    /// `#` are ignored; keys must already exist in the defaults.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config line {} is not `key = value`: {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            if !self.map.contains_key(key) {
                return Err(CliError::usage(format!("unknown config key {key:?}")));
            }
            self.map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    /// Flags override the file; absent flags leave the current value.
    pub fn set_flag<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.map.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.map.get(key).map(|s| s.as_str()).unwrap_or("")
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, CliError> {
        self.get(key)
            .parse()
            .map_err(|_| CliError::usage(format!("{key} must be a number, got {:?}", self.get(key))))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, CliError> {
        self.get(key)
            .parse()
            .map_err(|_| CliError::usage(format!("{key} must be an integer, got {:?}", self.get(key))))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse()
                    .map_err(|_| CliError::usage(format!("{key} has a non-numeric entry {tok:?}")))
            })
            .collect()
    }

    /// The resolved configuration, echoed into output headers.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.map.clone()
    }
}
