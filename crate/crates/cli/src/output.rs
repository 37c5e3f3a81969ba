//! Artifacts of a run: manifest, CSV tables, NDJSON reports and a summary.
//! Nothing time- or host-dependent is written, so equal inputs give equal bytes.

use std::fs;
use std::path::Path;

use fracspde::Field;
use serde::Serialize;

use crate::config::RunConfig;
use crate::HarnessError;

pub const MANIFEST: &str = "manifest.toml";
pub const REPORT: &str = "report.ndjson";
pub const SUMMARY: &str = "summary.txt";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    /// `(file name, CSV text)`.
    pub tables: Vec<(String, String)>,
    pub reports: Vec<serde_json::Value>,
    pub summary: String,
    /// Fields written in the flat binary format.
    pub fields: Vec<(String, Field)>,
    pub inconclusive: bool,
}

pub fn csv_table<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn manifest_text(config: &RunConfig) -> String {
    format!(
        "# fracspde {} {}\n{}",
        env!("CARGO_PKG_VERSION"),
        config.kind.name(),
        config.to_toml()
    )
}

pub fn write_artifacts(dir: &Path, config: &RunConfig, a: &Artifacts) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST), manifest_text(config))?;
    for (name, text) in &a.tables {
        fs::write(dir.join(name), text)?;
    }
    let mut nd = String::new();
    for r in &a.reports {
        nd.push_str(&serde_json::to_string(r).expect("report serializes"));
        nd.push('\n');
    }
    fs::write(dir.join(REPORT), nd)?;
    for (name, field) in &a.fields {
        field.write_binary(&dir.join(name))?;
    }
    fs::write(dir.join(SUMMARY), &a.summary)?;
    Ok(())
}
