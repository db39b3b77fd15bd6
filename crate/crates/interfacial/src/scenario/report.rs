//! Run output: one JSON report plus optional CSV tables and binary blobs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Format, RunKind, ScenarioConfig};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub run_kind: RunKind,
    pub seed: u64,
    /// The configuration after defaults were filled in.
    pub config: ScenarioConfig,
    pub results: serde_json::Value,
}

/// A CSV table already rendered to bytes; the header is always present.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub csv: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    /// Binary artefacts such as the final snapshot.
    pub blobs: Vec<(String, Vec<u8>)>,
    /// Set when the run produced a result that its own checks reject.
    pub failure: Option<String>,
    /// Criterion verdict, for run kinds that produce one.
    pub stable: Option<bool>,
}

impl Outcome {
    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report)?)
    }
}

/// Writes the requested formats into `dir`, creating it if needed, and
/// returns the paths written.
pub fn emit(outcome: &Outcome, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        std::fs::write(&p, outcome.report_json()? + "\n")?;
        written.push(p);
    }
    if formats.contains(&Format::Csv) {
        for t in &outcome.tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, &t.csv)?;
            written.push(p);
        }
    }
    for (name, bytes) in &outcome.blobs {
        let p = dir.join(name);
        std::fs::write(&p, bytes)?;
        written.push(p);
    }
    Ok(written)
}

/// Renders rows under an explicit header so empty tables still carry one.
pub(crate) fn csv_table<R: Serialize>(name: &str, header: &[&str], rows: &[R]) -> Result<Table> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let csv = w
        .into_inner()
        .map_err(|e| crate::error::Error::Io(e.into_error()))?;
    Ok(Table {
        name: name.to_string(),
        csv,
    })
}

/// Table produced by one of the library's own CSV writers.
pub(crate) fn table_from(
    name: &str,
    write: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<Table> {
    let mut csv = Vec::new();
    write(&mut csv)?;
    Ok(Table {
        name: name.to_string(),
        csv,
    })
}
