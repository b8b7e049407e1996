// SPDX-License-Identifier: Apache-2.0

//! Scenario files.
//!
//! A scenario file is TOML. Every section and key is optional; anything left
//! out takes its default (`mavtrack describe-config` prints them all). Unknown
//! keys are errors. Angles are in radians, lengths in meters, times in
//! seconds and rates in Hz.

use std::path::Path;

use mavtrack_core::sim::ScenarioConfig;
use mavtrack_core::Error as CoreError;
use toml::{Table, Value};

use crate::error::{CliError, ConfigError, ConfigErrorKind};

/// 1-based line on which `key` (a dotted path) is assigned, if it is.
pub fn locate_key(src: &str, key: &str) -> Option<usize> {
    let mut section = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            section = normalize_path(h);
            if section == key {
                return Some(i + 1);
            }
        } else if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = normalize_path(h);
            if section == key {
                return Some(i + 1);
            }
        } else if let Some((lhs, _)) = line.split_once('=') {
            let full = join(&section, &normalize_path(lhs));
            if full == key || key.starts_with(&format!("{full}.")) {
                return Some(i + 1);
            }
        }
    }
    None
}

fn normalize_path(p: &str) -> String {
    p.split('.')
        .map(|s| s.trim().trim_matches('"'))
        .collect::<Vec<_>>()
        .join(".")
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Dotted key assigned on the line containing byte `offset`.
fn key_at(src: &str, offset: usize) -> Option<String> {
    let mut section = String::new();
    let mut pos = 0;
    for raw in src.split_inclusive('\n') {
        let line = raw.split('#').next().unwrap_or("").trim();
        let header = line
            .strip_prefix("[[")
            .and_then(|l| l.strip_suffix("]]"))
            .or_else(|| line.strip_prefix('[').and_then(|l| l.strip_suffix(']')));
        let end = pos + raw.len();
        if let Some(h) = header {
            section = normalize_path(h);
            if offset < end {
                return Some(section);
            }
        } else if offset < end {
            return line
                .split_once('=')
                .map(|(lhs, _)| join(&section, &normalize_path(lhs)))
                .or(Some(section).filter(|s| !s.is_empty()));
        }
        pos = end;
    }
    None
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.split("unknown field `").nth(1)?;
    rest.split('`').next()
}

/// Applies `key=value` to a parsed table. The value is read as a TOML value
/// and falls back to a plain string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let fail = |message: String| ConfigError {
        kind: ConfigErrorKind::Override,
        keys: vec![],
        lines: vec![],
        message,
    };
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| fail(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(fail(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key just parsed"),
        Err(_) => Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(fail(format!("override `{key}`: `{p}` is not a section"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn domain_error(src: &str, err: &CoreError, overridden: &[String]) -> ConfigError {
    let keys: Vec<String> = match err {
        CoreError::Invalid { key, .. } => vec![key.to_string()],
        CoreError::Conflict { first, second, .. } => vec![first.to_string(), second.to_string()],
        CoreError::NoParticles => vec!["tracker.n_particles".into()],
        CoreError::DegenerateVolume => vec!["tracker.surveillance_volume".into()],
        CoreError::UnknownPattern(_) => vec!["target.pattern".into()],
        _ => vec![],
    };
    let lines = keys
        .iter()
        .map(|k| {
            if overridden.contains(k) {
                None
            } else {
                locate_key(src, k)
            }
        })
        .collect();
    ConfigError {
        kind: ConfigErrorKind::Invalid,
        keys,
        lines,
        message: err.to_string(),
    }
}

/// Parses and validates a scenario from text, after applying overrides.
pub fn parse_config_str(src: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut table: Table = src.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| line_of(src, s.start));
        ConfigError {
            kind: ConfigErrorKind::Syntax,
            keys: vec![],
            lines: vec![],
            message: match line {
                Some(l) => format!("line {l}: {}", e.message()),
                None => e.message().to_string(),
            },
        }
    })?;
    let mut overridden = Vec::new();
    for o in overrides {
        apply_override(&mut table, o)?;
        overridden.push(
            o.split_once('=')
                .map(|(k, _)| k.trim().to_string())
                .unwrap_or_default(),
        );
    }
    // Deserializing from text keeps spans, so errors can be traced back to a key.
    let text = if overrides.is_empty() {
        src.to_string()
    } else {
        toml::to_string(&table).map_err(|e| ConfigError {
            kind: ConfigErrorKind::Override,
            keys: vec![],
            lines: vec![],
            message: e.to_string(),
        })?
    };
    let config: ScenarioConfig = toml::from_str(&text).map_err(|e| {
        let key = e.span().and_then(|s| key_at(&text, s.start));
        let kind = if unknown_field(e.message()).is_some() {
            ConfigErrorKind::UnknownKey
        } else {
            ConfigErrorKind::Invalid
        };
        let key = match (kind, key, unknown_field(e.message())) {
            (ConfigErrorKind::UnknownKey, Some(k), Some(field)) if !k.ends_with(field) => {
                Some(join(&k, field))
            }
            (_, k, _) => k,
        };
        let line = key.as_deref().and_then(|k| {
            if overridden.iter().any(|o| o == k) {
                None
            } else {
                locate_key(src, k)
            }
        });
        ConfigError {
            kind,
            keys: key.into_iter().collect(),
            lines: vec![line],
            message: e.message().trim().to_string(),
        }
    })?;
    config
        .validate()
        .map_err(|e| domain_error(src, &e, &overridden))?;
    Ok(config)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&src, overrides).map_err(|error| CliError::Config {
        path: path.to_path_buf(),
        error,
    })
}

/// The default scenario as TOML.
pub fn default_config_toml() -> String {
    toml::to_string_pretty(&ScenarioConfig::default()).expect("default config serializes")
}
