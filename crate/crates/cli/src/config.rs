//! Resolving a [`RunConfig`] from a TOML file or a run manifest plus
//! command-line overrides.

use std::path::Path;

use msenas::run::RunConfig;
use serde_json::{Map, Value};

/// Loads the document at `path` as JSON. A `.json` file may be a bare
/// config or a run manifest, in which case its `config` member is used.
pub fn load_document(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let bad = |e: &dyn std::fmt::Display| format!("cannot parse config {}: {e}", path.display());
    if path.extension().is_some_and(|x| x == "json") {
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        if doc.get("schema_version").is_some() {
            if let Some(config) = doc.get_mut("config") {
                return Ok(config.take());
            }
        }
        Ok(doc)
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| bad(&e))?;
        serde_json::to_value(table).map_err(|e| bad(&e))
    }
}

/// Sets a dotted key such as `evolution.n_pop`. The value is read as JSON
/// when it parses, otherwise taken as a string.
pub fn set_key(doc: &mut Value, key: &str, raw: &str) -> Result<(), String> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_value(doc, key, value)
}

pub fn set_value(doc: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("malformed key {key:?}"));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    for part in path {
        if !node.is_object() {
            return Err(format!("{key}: {part} is not a section"));
        }
        node = node
            .as_object_mut()
            .expect("checked above")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(format!("{key}: parent is not a section")),
    }
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

pub fn resolve(doc: Value) -> Result<RunConfig, String> {
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| format!("invalid config: {e}"))?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
