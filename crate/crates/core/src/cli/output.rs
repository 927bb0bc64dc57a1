//! Provenance headers and deterministic file emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

pub const TOOLKIT: &str = "nestreg";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Prefix of the CSV comment line and JSON key that carry the run timestamp;
/// the only content allowed to differ between identical runs.
pub const TIMESTAMP_KEY: &str = "generated";
pub const HASH_KEY: &str = "config_sha256";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub generated: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(command: &'static str, config_sha256: String, seed: u64) -> Self {
        Self {
            toolkit: TOOLKIT,
            version: VERSION,
            command,
            config_sha256,
            seed,
            generated: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }

    fn csv_header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {}", self.toolkit, self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# {HASH_KEY}: {}", self.config_sha256);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# {TIMESTAMP_KEY}: {}", self.generated);
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        s
    }
}

/// Files written by one command, in order.
#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    /// CSV with the provenance comment block, a header row and LF endings.
    pub fn csv(&mut self, path: PathBuf, prov: &Provenance, header: &str, rows: &[String]) -> Result<()> {
        let mut s = prov.csv_header();
        s.push_str(header);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        fs::write(&path, s)?;
        self.0.push(path);
        Ok(())
    }

    /// Pretty JSON object `{ "provenance": ..., <body fields> }`.
    pub fn json(&mut self, path: PathBuf, prov: &Provenance, body: impl Serialize) -> Result<()> {
        let mut value = serde_json::to_value(body)?;
        let obj = value
            .as_object_mut()
            .expect("report bodies are JSON objects");
        let mut out = serde_json::Map::new();
        out.insert("provenance".into(), prov.json());
        out.append(obj);
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(out))?;
        text.push('\n');
        fs::write(&path, text)?;
        self.0.push(path);
        Ok(())
    }

    pub fn record(&mut self, path: PathBuf) {
        self.0.push(path);
    }
}

/// `{:.17e}`, round-trip exact.
pub fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// The config hash recorded in a CSV or JSON output, if any.
pub fn recorded_hash(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text)?;
        return Ok(v
            .get("provenance")
            .and_then(|p| p.get(HASH_KEY))
            .and_then(|h| h.as_str())
            .map(str::to_owned));
    }
    let prefix = format!("# {HASH_KEY}: ");
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned)))
}
