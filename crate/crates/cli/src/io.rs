// SPDX-License-Identifier: MIT OR Apache-2.0

//! Wide-CSV datasets and JSON files.

use std::fs;
use std::path::Path;

use cpclust::SequenceDataset;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult, Context};

/// Reads `id,loc1,..,locM` with one sequence per row.
pub fn read_dataset(path: &Path) -> CliResult<SequenceDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: header: {e}", path.display())))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: header needs an id column and at least one location",
            path.display()
        )));
    }
    let location_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let m = location_ids.len();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Data(format!("{}: row {row}: {e}", path.display())))?;
        let id = record.get(0).unwrap_or_default().to_string();
        if record.len() != m + 1 {
            return Err(CliError::Data(format!(
                "{}: row {row} ({id}) has {} values, expected {m}",
                path.display(),
                record.len().saturating_sub(1)
            )));
        }
        let values = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, v)| {
                v.parse::<f64>().map_err(|_| {
                    CliError::Data(format!(
                        "{}: row {row} ({id}) column {}: cannot parse {v:?}",
                        path.display(),
                        location_ids[j]
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        ids.push(id);
        rows.push(values);
    }
    SequenceDataset::new(rows, ids, location_ids)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_dataset(path: &Path, data: &SequenceDataset) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).runtime()?;
    let mut header = vec!["id".to_string()];
    header.extend(data.location_ids.iter().cloned());
    w.write_record(&header).runtime()?;
    for (id, row) in data.sequence_ids.iter().zip(data.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).runtime()?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes rows under a header; cells are already formatted.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).runtime()?;
    w.write_record(header).runtime()?;
    for r in rows {
        w.write_record(r).runtime()?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).runtime()?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Parses a JSON file; failures are config errors.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses a JSON results file; failures are data errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
