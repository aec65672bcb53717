//! Provenance header written at the top of every output file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const TOOL_NAME: &str = "svmc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered key/value parameters. Keys are sorted so headers are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Metadata::default();
        m.set("tool", TOOL_NAME);
        m.set("version", TOOL_VERSION);
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// `# key: value` lines.
    pub fn to_comment_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }

    /// Reads back `# key: value` lines from the top of a CSV file.
    pub fn parse_comment_block(text: &str) -> Self {
        let mut m = Metadata::default();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = rest.trim().split_once(": ") {
                m.set(k.trim(), v.trim());
            }
        }
        m
    }
}
