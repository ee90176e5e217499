//! TOML scenario files and `key=value` overrides.

use std::fs;
use std::path::Path;

use aircomp_core::scenario::{build_default_earthquake, Scenario, ScenarioError};
use thiserror::Error;
use toml::{Table, Value};

/// Name accepted in place of a path for the built-in scenario.
pub const BUILTIN_EARTHQUAKE: &str = "builtin:earthquake";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{0}")]
    Validation(String),
}

impl LoadError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, LoadError::Io { .. })
    }
}

impl From<ScenarioError> for LoadError {
    fn from(e: ScenarioError) -> Self {
        LoadError::Validation(e.to_string())
    }
}

pub fn to_toml(scenario: &Scenario) -> String {
    toml::to_string(scenario).expect("scenarios always serialize")
}

/// Parses scenario text without validating it. Keys the schema does not
/// know are rejected.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, LoadError> {
    let raw: Table = toml::from_str(text).map_err(|e| LoadError::Parse {
        origin: origin.to_string(),
        message: e.message().to_string(),
    })?;
    from_table(raw, origin)
}

fn from_table(raw: Table, origin: &str) -> Result<Scenario, LoadError> {
    let scenario: Scenario = Value::Table(raw.clone())
        .try_into()
        .map_err(|e: toml::de::Error| LoadError::Parse {
            origin: origin.to_string(),
            message: e.message().to_string(),
        })?;
    let canonical = match Value::try_from(&scenario).expect("scenarios always serialize") {
        Value::Table(t) => t,
        _ => unreachable!("scenario serializes to a table"),
    };
    let mut unknown = Vec::new();
    unknown_keys(&raw, &canonical, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(LoadError::Validation(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok(scenario)
}

/// Keys present in `raw` that did not survive a round trip through the
/// schema.
fn unknown_keys(raw: &Table, canonical: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in raw {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (v, canonical.get(k)) {
            (_, None) => out.push(path),
            (Value::Table(a), Some(Value::Table(b))) => unknown_keys(a, b, &path, out),
            (Value::Array(a), Some(Value::Array(b))) => {
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    if let (Value::Table(x), Value::Table(y)) = (x, y) {
                        unknown_keys(x, y, &format!("{path}.{i}"), out);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario = parse_scenario(&text, &path.display().to_string())?;
    scenario.validate()?;
    Ok(scenario)
}

/// Resolves `builtin:earthquake` or a file path. Not validated, so that
/// overrides can still be applied.
pub fn resolve_scenario(source: &str, users_per_town: Option<u32>) -> Result<Scenario, LoadError> {
    if source == BUILTIN_EARTHQUAKE {
        let n = users_per_town.unwrap_or(aircomp_core::scenario::DEFAULT_USERS_PER_TOWN);
        if n == 0 {
            return Err(LoadError::Validation("users_per_town: must be at least 1".into()));
        }
        return Ok(build_default_earthquake(n));
    }
    if users_per_town.is_some() {
        return Err(LoadError::Validation(
            "users_per_town: only applies to the built-in scenario".into(),
        ));
    }
    let path = Path::new(source);
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

/// Applies `key=value` overrides. Keys are dotted paths into the scenario
/// file (`sim.duration`, `towns.0.radius`); values use TOML syntax, bare
/// words are taken as strings.
pub fn apply_overrides(scenario: &Scenario, overrides: &[String]) -> Result<Scenario, LoadError> {
    if overrides.is_empty() {
        return Ok(scenario.clone());
    }
    let mut table = match Value::try_from(scenario).expect("scenarios always serialize") {
        Value::Table(t) => t,
        _ => unreachable!("scenario serializes to a table"),
    };
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| LoadError::Validation(format!("override {o:?}: expected key=value")))?;
        let key = key.trim();
        let value = parse_value(raw.trim());
        set_path(&mut table, key, value)
            .map_err(|m| LoadError::Validation(format!("override {key}: {m}")))?;
    }
    from_table(table, "overrides")
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(root: &mut Table, key: &str, value: Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur: &mut Value = root
        .get_mut(parents.first().copied().unwrap_or(last))
        .ok_or_else(|| "unknown key".to_string())?;
    if parents.is_empty() {
        *cur = value;
        return Ok(());
    }
    for p in &parents[1..] {
        cur = step(cur, p)?;
    }
    match cur {
        Value::Table(t) => {
            // optional settings are absent from the serialized form; let
            // the schema decide whether the key exists
            t.insert(last.to_string(), value);
            Ok(())
        }
        Value::Array(_) => {
            *step(cur, last)? = value;
            Ok(())
        }
        _ => Err("unknown key".into()),
    }
}

fn step<'a>(v: &'a mut Value, part: &str) -> Result<&'a mut Value, String> {
    match v {
        Value::Table(t) => t.get_mut(part).ok_or_else(|| "unknown key".to_string()),
        Value::Array(a) => {
            let len = a.len();
            let i: usize = part.parse().map_err(|_| format!("{part:?} is not a list index"))?;
            a.get_mut(i).ok_or_else(|| format!("index {i} out of range (length {len})"))
        }
        _ => Err("unknown key".into()),
    }
}
