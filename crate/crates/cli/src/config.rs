//! `key=value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use qcbp_core::Rational;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    command: String,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig { command: command.to_string(), values: BTreeMap::new() }
    }

    /// Blank lines and `#` comments are ignored; keys may use `-` or `_`.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
            self.set(k.trim(), v.trim());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.replace('-', "_"), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Input(format!("{key}: cannot parse '{v}': {e}"))),
        }
    }

    pub fn rational(&self, key: &str, default: &str) -> Result<Rational, CliError> {
        self.parse(key, default.parse::<Rational>().expect("valid default"))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(v) => Err(CliError::Input(format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        match self.get("seed") {
            None => Err(CliError::Input("seed is required for this command".into())),
            Some(_) => self.parse("seed", 0),
        }
    }

    /// SHA-256 over the command and the sorted effective settings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(b"\n");
        for (k, v) in &self.values {
            // output locations are excluded
            if k == "out" || k == "checkpoint" {
                continue;
            }
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> String {
        format!(
            "# qcbp {} config={} core={} cli={}",
            self.command,
            self.hash(),
            qcbp_core::VERSION,
            env!("CARGO_PKG_VERSION")
        )
    }

    pub fn meta(&self) -> serde_json::Value {
        serde_json::json!({
            "command": self.command,
            "config_hash": self.hash(),
            "core_version": qcbp_core::VERSION,
            "cli_version": env!("CARGO_PKG_VERSION"),
        })
    }
}
