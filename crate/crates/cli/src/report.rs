//! Top-level JSON report shared by every subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug)]
pub struct Report {
    pub command: String,
    pub model: Option<String>,
    pub parameters: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<String>,
    pub data: Value,
}

impl Report {
    pub fn new(command: &str, model: Option<&str>) -> Self {
        Self {
            command: command.to_string(),
            model: model.map(str::to_string),
            parameters: BTreeMap::new(),
            verdicts: Vec::new(),
            artifacts: Vec::new(),
            data: Value::Null,
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.parameters.insert(key.to_string(), to_value(v));
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Serialize) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
            detail: to_value(detail),
        });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("model".into(), self.model.clone().map_or(Value::Null, Value::String));
        m.insert("parameters".into(), to_value(&self.parameters));
        m.insert("verdicts".into(), to_value(&self.verdicts));
        m.insert("artifacts".into(), to_value(&self.artifacts));
        if !self.data.is_null() {
            m.insert("data".into(), self.data.clone());
        }
        m.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        round_floats(Value::Object(m))
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

/// Rounds every float to 12 significant digits so that reports are stable
/// across platforms.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap();
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Output root; every artifact path is recorded relative to it.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn write(&self, report: &mut Report, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        report.artifacts.push(rel.to_string());
        Ok(())
    }

    pub fn write_report(&self, report: &Report, rel: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, report.render()).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_twelve_digits() {
        let v = round_floats(serde_json::json!({"a": [0.1 + 0.2, 1.0 / 3.0, 2, 1e-300]}));
        assert_eq!(v.to_string(), r#"{"a":[0.3,0.333333333333,2,1e-300]}"#);
    }
}
