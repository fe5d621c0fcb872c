//! Comma-separated datasets: a header row, one row per example, feature
//! columns in order, an integer `label` column and an optional `id` column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Example, FullyLabeledDataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub label_column: String,
    pub id_column: String,
    /// Number of classes; inferred from the largest label when absent.
    pub class_count: Option<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { label_column: "label".into(), id_column: "id".into(), class_count: None }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), line, message: message.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

/// Reads a dataset, preserving row order. Ids are row positions unless an
/// id column is present.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FullyLabeledDataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| parse_err(path, 1, format!("no '{}' column", schema.label_column)))?;
    let id_at = headers.iter().position(|h| h == schema.id_column);
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != label_at && Some(i) != id_at).collect();
    let mut examples = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(row + 2, |p| p.line() as usize);
        let x = feature_cols
            .iter()
            .map(|&c| {
                let cell = &rec[c];
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("column '{}': not a number: '{cell}'", &headers[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        let y = rec[label_at]
            .trim()
            .parse::<usize>()
            .map_err(|_| parse_err(path, line, format!("label is not a class index: '{}'", &rec[label_at])))?;
        if let Some(c) = schema.class_count {
            if y >= c {
                return Err(parse_err(path, line, format!("label {y} outside [0, {c})")));
            }
        }
        let id = match id_at {
            Some(i) => {
                rec[i].trim().parse::<u64>().map_err(|_| parse_err(path, line, format!("bad id '{}'", &rec[i])))?
            }
            None => row as u64,
        };
        examples.push(Example { id, x, y });
    }
    let c = schema.class_count.unwrap_or_else(|| examples.iter().map(|e| e.y + 1).max().unwrap_or(0).max(2));
    FullyLabeledDataset::new(examples, c, feature_cols.len())
}

/// Writes `id, x0, …, x{d−1}, label`. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_csv(ds: &FullyLabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..ds.dim()).map(|i| format!("x{i}")));
    header.push("label".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for e in ds.examples() {
        let mut rec = vec![e.id.to_string()];
        rec.extend(e.x.iter().map(f64::to_string));
        rec.push(e.y.to_string());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sweep results, one row per run: `n1,n2,rep,seed,accuracy,wall_seconds`.
pub fn save_sweep_csv(result: &crate::eval::SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in &result.rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_sweep_csv(path: impl AsRef<Path>) -> Result<crate::eval::SweepResult> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))?;
    Ok(crate::eval::SweepResult { rows })
}
