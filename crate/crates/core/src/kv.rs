//! Flat `key=value` text used for configs and compact specs.
//!
//! Two shapes share one vocabulary:
//! - config files: one `key = value` per line, `#` comments, repeated keys allowed;
//! - tagged specs: `name,key=value,key=value` on a single line.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered key/value pairs with consumption tracking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Args {
    pairs: Vec<(String, String)>,
}

impl Args {
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Self {
        Args { pairs }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.pairs.retain(|(k, _)| k != key);
        self.pairs.push((key.to_string(), value.into()));
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        let pos = self.pairs.iter().rposition(|(k, _)| k == key)?;
        let value = self.pairs[pos].1.clone();
        self.pairs.retain(|(k, _)| k != key);
        Some(value)
    }

    /// Removes every occurrence of `key`, returning values in file order.
    pub fn take_all(&mut self, key: &str) -> Vec<String> {
        let values = self
            .pairs
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .collect();
        self.pairs.retain(|(k, _)| k != key);
        values
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    /// Fails if any key was left unconsumed.
    pub fn finish(self) -> Result<()> {
        if let Some((k, _)) = self.pairs.first() {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        Ok(())
    }
}

/// Parses `name,key=value,...`.
pub fn parse_tagged(s: &str) -> Result<(String, Args)> {
    let mut parts = s.split(',').map(str::trim);
    let name = parts
        .next()
        .filter(|n| !n.is_empty())
        .ok_or_else(|| Error::Config(format!("empty spec '{s}'")))?
        .to_ascii_lowercase();
    let mut pairs = Vec::new();
    for part in parts.filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in '{part}'")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok((name, Args { pairs }))
}

/// Parses a config file body.
pub fn parse_config(text: &str) -> Result<Args> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(Args { pairs })
}

pub fn read_config(path: &Path) -> Result<Args> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
