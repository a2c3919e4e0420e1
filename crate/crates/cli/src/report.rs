//! Output rendering with the reproducibility header.

use anyhow::Result;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Everything needed to rerun a report: tool version, command, input hashes, tolerances.
/// Parallelism is left out on purpose so outputs match across `--jobs`.
pub struct Header(Map<String, Value>);

impl Header {
    pub fn new(command: &str, instance_text: &str) -> Self {
        let mut m = Map::new();
        m.insert("tool".into(), json!("kms-phase"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(command));
        m.insert("instance_sha256".into(), json!(sha256(instance_text)));
        Header(m)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.0.insert(key.into(), value);
    }
}

pub enum Report {
    Json(Value),
    Csv(String),
}

impl Report {
    pub fn render(&self, header: &Header) -> Result<String> {
        Ok(match self {
            Report::Json(v) => {
                let body = match v {
                    Value::Object(m) => {
                        let mut m = m.clone();
                        m.insert("header".into(), Value::Object(header.0.clone()));
                        Value::Object(m)
                    }
                    other => json!({ "header": header.0, "result": other }),
                };
                let mut s = serde_json::to_string_pretty(&body)?;
                s.push('\n');
                s
            }
            Report::Csv(csv) => {
                let mut s = String::new();
                for (k, v) in &header.0 {
                    s.push_str(&format!("# {k}: {v}\n"));
                }
                s.push_str(csv);
                s
            }
        })
    }
}
