//! Parameter tables, the flat `key = value` config format and typed lookups.
//!
//! Values resolve in three layers: table default, then config file, then
//! command-line flag.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn p(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default, help }
}

/// Keys every subcommand accepts in a config file besides its own table.
pub const GLOBAL_KEYS: [&str; 2] = ["seed", "serial"];

/// One `key = value` entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// a repeated key is an error.
pub fn parse_config(path: &str, text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out: Vec<ConfigEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((k, v)) = trimmed.split_once('=') else {
            return Err(CliError::Config {
                path: path.to_string(),
                line,
                detail: format!("expected 'key = value', got '{}'", trimmed),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(CliError::Config {
                path: path.to_string(),
                line,
                detail: "empty key".into(),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(CliError::Config {
                path: path.to_string(),
                line,
                detail: format!("key '{}' already set on line {}", key, prev.line),
            });
        }
        out.push(ConfigEntry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Resolved parameter values for one run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Params {
    pub fn defaults(specs: &[ParamSpec]) -> Self {
        let mut p = Params::default();
        for s in specs {
            p.set(s.key, s.default);
        }
        p
    }

    pub fn set(&mut self, key: &str, value: &str) {
        if !self.values.contains_key(key) {
            self.order.push(key.to_string());
        }
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Entries in table order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.order
            .iter()
            .map(|k| (k.as_str(), self.values[k].as_str()))
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Usage(format!("parameter '{}' is not defined", key)))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        raw.parse::<T>().map_err(|e| CliError::InvalidValue {
            key: key.to_string(),
            value: raw.to_string(),
            detail: e.to_string(),
        })
    }

    /// Comma-separated list; `none` or an empty value is the empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        if raw.is_empty() || raw == "none" {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                item.trim().parse::<T>().map_err(|e| CliError::InvalidValue {
                    key: key.to_string(),
                    value: raw.to_string(),
                    detail: e.to_string(),
                })
            })
            .collect()
    }

    /// Like [`Params::list`] but refuses an empty list.
    pub fn nonempty_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.list(key)?;
        if v.is_empty() {
            return Err(CliError::InvalidValue {
                key: key.to_string(),
                value: self.raw(key)?.to_string(),
                detail: "needs at least one value".into(),
            });
        }
        Ok(v)
    }
}

/// Applies config entries over `params`, rejecting keys outside the table and
/// the global keys.
pub fn apply_config(
    params: &mut Params,
    specs: &[ParamSpec],
    entries: &[ConfigEntry],
    path: &str,
    subcommand: &str,
) -> Result<()> {
    for e in entries {
        let known = specs.iter().any(|s| s.key == e.key) || GLOBAL_KEYS.contains(&e.key.as_str());
        if !known {
            return Err(CliError::UnknownKey {
                path: path.to_string(),
                line: e.line,
                key: e.key.clone(),
                subcommand: subcommand.to_string(),
            });
        }
        params.set(&e.key, &e.value);
    }
    Ok(())
}

pub fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::InvalidValue {
            key: key.to_string(),
            value: raw.to_string(),
            detail: "expected true or false".into(),
        }),
    }
}
