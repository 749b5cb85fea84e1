//! Flat `key = value` configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Resolved settings for one run, in key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines; `#` and `;` start comments, `[section]`
    /// headers are ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap().trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value, got `{}`", n + 1, raw.trim()))
            })?;
            let k = normalize(k);
            if k.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", n + 1)));
            }
            if values.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(RunConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key` when the flag was given.
    pub fn set<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(normalize(key), v.to_string());
        }
    }

    pub fn set_default<T: Display>(&mut self, key: &str, value: T) {
        self.values.entry(normalize(key)).or_insert_with(|| value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing setting `{key}`")))
    }

    /// Fails on keys outside `known`, which catches typos in config files.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), CliError> {
        match self.values.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!(
                "unknown setting `{k}` (expected one of: {})",
                known.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`RunConfig::to_text`], hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

// `h-frac` and `h_frac` name the same key; case is kept so `D` and `d` differ
fn normalize(k: &str) -> String {
    k.trim().replace('-', "_")
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::Config(format!("`{key}`: bad entry `{p}`")))
        })
        .collect()
}

/// `lo:hi` window.
pub fn parse_window(key: &str, s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("`{key}`: expected lo:hi, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let w = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if !(w.0 <= w.1) {
        return Err(bad());
    }
    Ok(w)
}

/// `r:c-r:c` site pairs separated by `;`, counted from 0.
pub fn parse_pairs(s: &str) -> Result<Vec<((usize, usize), (usize, usize))>, CliError> {
    let site = |t: &str| -> Result<(usize, usize), CliError> {
        let bad = || CliError::Config(format!("`pairs`: bad site `{t}`, expected row:col"));
        let (r, c) = t.trim().split_once(':').ok_or_else(bad)?;
        Ok((
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    };
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once('-')
                .ok_or_else(|| CliError::Config(format!("`pairs`: bad pair `{p}`, expected r:c-r:c")))?;
            Ok((site(a)?, site(b)?))
        })
        .collect()
}

/// `NxN`.
pub fn parse_lattice(s: &str) -> Result<usize, CliError> {
    let bad = || CliError::Config(format!("`lattice`: expected NxN, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b): (usize, usize) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a != b {
        return Err(CliError::Config(format!(
            "only square lattices are supported, got {a}x{b}"
        )));
    }
    Ok(a)
}
