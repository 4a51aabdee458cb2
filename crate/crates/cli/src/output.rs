//! CSV tables and their JSON metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

/// Fixed formatting for every floating-point cell: twelve significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

/// A header plus rows of preformatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Consecutive rows that used the same method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineRun {
    pub first_row: usize,
    pub last_row: usize,
    pub engine: String,
}

/// Run-length encoding of per-row engine labels.
pub fn engine_runs<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<EngineRun> {
    let mut runs: Vec<EngineRun> = Vec::new();
    for (i, label) in labels.into_iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.engine == label => run.last_row = i,
            _ => runs.push(EngineRun {
                first_row: i,
                last_row: i,
                engine: label.to_string(),
            }),
        }
    }
    runs
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`, returning the CSV path.
pub fn write_dataset(
    dir: &Path,
    stem: &str,
    table: &Table,
    metadata: Value,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, table.to_csv()?)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let mut meta = json!({
        "tool": "mazer",
        "version": env!("CARGO_PKG_VERSION"),
        "csv": format!("{stem}.csv"),
        "columns": table.header,
        "rows": table.rows.len(),
    });
    if let (Some(m), Value::Object(extra)) = (meta.as_object_mut(), metadata) {
        m.extend(extra);
    }
    let meta_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    fs::write(&meta_path, text).with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(csv_path)
}
