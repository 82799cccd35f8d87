//! File formats: dataset and table CSVs, JSON model documents.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gradxplain_core::data::{Dataset, FeatureStats};
use gradxplain_core::linalg::Matrix;
use gradxplain_core::{ExplanationSource, ExplanationVector, Label};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Decimal representation with 17 significant digits, enough to recover
/// every `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column layout of a dataset CSV.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Column holding a row identifier; not read as a feature.
    pub id_column: Option<String>,
    pub label_column: String,
    /// Accepted labels; any integer when absent.
    pub classes: Option<Vec<Label>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            id_column: Some("id".into()),
            label_column: "label".into(),
            classes: None,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn headers(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn position(path: &Path, header: &[String], column: &str) -> Result<usize> {
    header.iter().position(|h| h == column).ok_or_else(|| Error::MissingColumn {
        path: path.into(),
        column: column.into(),
    })
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, column: &str, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| Error::Cell {
        path: path.into(),
        row,
        column: column.into(),
        reason: format!("cannot parse `{cell}`"),
    })
}

/// Reads a dataset. Every column other than the id and label columns is a
/// feature; row ids are `0..n` in file order.
pub fn read_dataset(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    let label_at = position(path, &header, &schema.label_column)?;
    let id_at = match &schema.id_column {
        Some(c) => header.iter().position(|h| h == c),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| j != label_at && Some(j) != id_at)
        .collect();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        for &j in &feature_cols {
            let v: f64 = parse_cell(path, row, &header[j], &rec[j])?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    path: path.into(),
                    row,
                    column: header[j].clone(),
                    reason: "non-finite value".into(),
                });
            }
            values.push(v);
        }
        let label: Label = parse_cell(path, row, &header[label_at], &rec[label_at])?;
        if let Some(classes) = &schema.classes {
            if !classes.contains(&label) {
                return Err(Error::Cell {
                    path: path.into(),
                    row,
                    column: header[label_at].clone(),
                    reason: format!("label {label} is not one of {classes:?}"),
                });
            }
        }
        labels.push(label);
    }
    let x = Matrix::from_row_major(labels.len(), feature_cols.len(), values)?;
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    Ok(Dataset::new(x, labels, Some(names))?)
}

/// Writes `id,<features...>,label`.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["id".to_string()];
    header.extend(data.feature_names.iter().cloned());
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for ((row, id), label) in data.features.rows().zip(&data.row_ids).zip(&data.labels) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| fmt_f64(*v)));
        rec.push(label.to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a prediction table `id,label`.
pub fn read_predictions(path: &Path) -> Result<Vec<(usize, Label)>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    let id_at = position(path, &header, "id")?;
    let label_at = position(path, &header, "label")?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        out.push((
            parse_cell(path, row, "id", &rec[id_at])?,
            parse_cell(path, row, "label", &rec[label_at])?,
        ));
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, entries: &[(usize, Label)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["id", "label"]).map_err(|e| Error::csv(path, e))?;
    for (id, l) in entries {
        w.write_record([id.to_string(), l.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// An explanation together with the id of the row it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationRow {
    pub id: usize,
    pub explanation: ExplanationVector,
}

/// Writes `id,<x_name...>,<grad_name...>,probability,predicted_label,source,far_field`.
pub fn write_explanations(path: &Path, names: &[String], rows: &[ExplanationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["id".to_string()];
    header.extend(names.iter().map(|n| format!("x_{n}")));
    header.extend(names.iter().map(|n| format!("grad_{n}")));
    header.extend(["probability", "predicted_label", "source", "far_field"].map(String::from));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let e = &r.explanation;
        let mut rec = vec![r.id.to_string()];
        rec.extend(e.query.iter().map(|v| fmt_f64(*v)));
        rec.extend(e.gradient.iter().map(|v| fmt_f64(*v)));
        rec.push(fmt_f64(e.predicted_probability));
        rec.push(e.predicted_label.to_string());
        rec.push(e.source.to_string());
        rec.push(e.far_field.to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_explanations`]; returns feature names and rows.
pub fn read_explanations(path: &Path) -> Result<(Vec<String>, Vec<ExplanationRow>)> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    let names: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("x_").map(str::to_string))
        .collect();
    let x_at: Vec<usize> = names
        .iter()
        .map(|n| position(path, &header, &format!("x_{n}")))
        .collect::<Result<_>>()?;
    let g_at: Vec<usize> = names
        .iter()
        .map(|n| position(path, &header, &format!("grad_{n}")))
        .collect::<Result<_>>()?;
    let id_at = position(path, &header, "id")?;
    let p_at = position(path, &header, "probability")?;
    let l_at = position(path, &header, "predicted_label")?;
    let s_at = position(path, &header, "source")?;
    let f_at = position(path, &header, "far_field")?;
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let floats = |cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter()
                .map(|&j| parse_cell(path, row, &header[j], &rec[j]))
                .collect()
        };
        let source: ExplanationSource = rec[s_at].parse().map_err(|_| Error::Cell {
            path: path.into(),
            row,
            column: "source".into(),
            reason: format!("unknown source `{}`", &rec[s_at]),
        })?;
        rows.push(ExplanationRow {
            id: parse_cell(path, row, "id", &rec[id_at])?,
            explanation: ExplanationVector {
                query: floats(&x_at)?,
                gradient: floats(&g_at)?,
                predicted_probability: parse_cell(path, row, "probability", &rec[p_at])?,
                predicted_label: parse_cell(path, row, "predicted_label", &rec[l_at])?,
                source,
                far_field: parse_cell(path, row, "far_field", &rec[f_at])?,
            },
        });
    }
    Ok((names, rows))
}

/// Reads a group membership table `id,group` with 0/1 or true/false flags.
pub fn read_groups(path: &Path) -> Result<BTreeMap<usize, bool>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    let id_at = position(path, &header, "id")?;
    let g_at = position(path, &header, "group")?;
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let flag = match &rec[g_at] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Cell {
                    path: path.into(),
                    row,
                    column: "group".into(),
                    reason: format!("expected 0/1, found `{other}`"),
                })
            }
        };
        out.insert(parse_cell(path, row, "id", &rec[id_at])?, flag);
    }
    Ok(out)
}

/// Writes any CSV table of preformatted cells.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| Error::json(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Normalization statistics as `{feature: {mean, std}}`, in feature order.
pub fn norm_stats_json(names: &[String], stats: &[FeatureStats]) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (n, s) in names.iter().zip(stats) {
        m.insert(n.clone(), serde_json::to_value(s).expect("plain struct"));
    }
    serde_json::Value::Object(m)
}

/// Inverse of [`norm_stats_json`]; stats are returned in `names` order.
pub fn parse_norm_stats(path: &Path, names: &[String], value: &serde_json::Value) -> Result<Vec<FeatureStats>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config(format!("{}: expected an object", path.display())))?;
    names
        .iter()
        .map(|n| {
            let v = obj.get(n).ok_or_else(|| Error::MissingColumn {
                path: path.into(),
                column: n.clone(),
            })?;
            serde_json::from_value(v.clone()).map_err(|e| Error::json(path, e))
        })
        .collect()
}
