//! Rendering with a metadata header.
//!
//! CSV output starts with `# key: value` lines (values are JSON) followed by
//! the header row; readers should skip lines starting with `#`. JSON output
//! is an object with `metadata` and `result` keys.

use serde_json::{json, Map, Value};

use crate::commands::Outcome;
use crate::spec::{ExperimentSpec, Format};

pub fn metadata(spec: &ExperimentSpec, outcome: &Outcome) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(spec.command.kind().to_string()));
    m.insert("seed".into(), json!(spec.seed));
    m.insert("spec".into(), serde_json::to_value(spec).expect("spec serializes"));
    for (k, v) in &outcome.notes {
        m.insert(k.clone(), v.clone());
    }
    m
}

pub fn render(spec: &ExperimentSpec, outcome: &Outcome) -> String {
    let meta = metadata(spec, outcome);
    match spec.format() {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in &meta {
                out.push_str(&format!("# {k}: {v}\n"));
            }
            out.push_str(&outcome.csv);
            out
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({ "metadata": meta, "result": outcome.result }))
                .expect("output serializes");
            s.push('\n');
            s
        }
    }
}

/// Strips the `#` header from CSV output.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
