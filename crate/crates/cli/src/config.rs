//! Flat `key = value` config files. Keys before any `[section]` apply to every
//! subcommand; keys inside `[flow]`, `[verify]`, ... apply to that subcommand only.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str, command: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(format!("config line {}: empty key", i + 1));
            }
            match &section {
                Some(s) if s != command => {}
                Some(_) => {
                    values.insert(k.to_string(), v.to_string());
                }
                None => {
                    values.entry(k.to_string()).or_insert_with(|| v.to_string());
                }
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path, command: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Config::parse(&text, command)
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    /// Keys nobody consumed.
    pub fn leftover(&self) -> Vec<&str> {
        self.values.keys().map(String::as_str).collect()
    }
}
