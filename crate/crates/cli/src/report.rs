//! Machine-readable run reports: versioned schema with the command echo, an
//! input digest, the per-operation results and the wall-clock time isolated
//! in its own field (the only nondeterministic one).

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize)]
pub struct Report {
    pub version: &'static str,
    pub command: String,
    pub input_digest: String,
    pub results: Value,
    pub timing_ms: u128,
}

impl Report {
    pub fn new(command: String, input: &[u8], results: Value, timing_ms: u128) -> Report {
        Report {
            version: SCHEMA_VERSION,
            command,
            input_digest: digest(input),
            results,
            timing_ms,
        }
    }

    pub fn to_text(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    /// Every numeric leaf must be finite for the report to be valid.
    pub fn validate(&self) -> Result<(), String> {
        fn walk(v: &Value, path: &str) -> Result<(), String> {
            match v {
                Value::Number(n) => {
                    if n.as_f64().map(|x| !x.is_finite()).unwrap_or(false) {
                        return Err(format!("non-finite number at {path}"));
                    }
                    Ok(())
                }
                Value::Array(items) => {
                    for (i, item) in items.iter().enumerate() {
                        walk(item, &format!("{path}[{i}]"))?;
                    }
                    Ok(())
                }
                Value::Object(map) => {
                    for (k, item) in map {
                        walk(item, &format!("{path}.{k}"))?;
                    }
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        walk(&self.results, "results")
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{}", hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Build a JSON object with deterministic (sorted) key order.
pub fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn vec_f64(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}
