//! JSON config documents with `key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer};
use serde_json::{Map, Value};

use super::CliError;

/// Reads `path` (if any) and applies each `key=value` override in order.
///
/// Keys may be dotted (`mixing.kind=exponential`). Values are parsed as JSON
/// when possible; `1,2,3` is read as a list; anything else is a string.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Map<String, Value>, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            match serde_json::from_str(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(CliError::Usage(format!("{}: config must be a JSON object", p.display()))),
                Err(e) => return Err(CliError::Usage(format!("{}: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    for item in overrides {
        apply(&mut root, item)?;
    }
    Ok(root)
}

pub fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str(raw) {
        return v;
    }
    if raw.contains(',') {
        if let Ok(v) = serde_json::from_str(&format!("[{raw}]")) {
            return v;
        }
    }
    Value::String(raw.to_string())
}

pub fn apply(root: &mut Map<String, Value>, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override '{item}' is not key=value")))?;
    set(root, key, parse_value(raw))
}

pub fn set(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::Usage(format!("empty key in '{key}'")))?;
    let mut node = root;
    for part in parts {
        let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        node = entry
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("'{part}' in '{key}' is not an object")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

pub fn typed<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Validation(format!("config: {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

/// Accepts `5` as shorthand for `[5]`.
pub fn one_or_many<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Vec<T>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

pub fn opt_one_or_many<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Option<Vec<T>>, D::Error> {
    one_or_many(d).map(Some)
}
