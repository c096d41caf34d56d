//! Delimited-text readers for observations, log-density tables and priors.

use std::fs;
use std::path::Path;

use crate::emissions::ObservationSequence;
use crate::error::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else if first.contains(',') {
        b','
    } else {
        b'\t'
    }
}

/// Observations: first column numeric values, optional second column of
/// labels, optional header row (detected when the first field is not a
/// number). Comma or tab delimited.
pub fn read_observations(path: &Path) -> Result<ObservationSequence> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut any_label = false;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let Some(first) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match first.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(parse_err(
                    path,
                    format!("line {}: `{first}` is not a number", line + 1),
                ))
            }
        }
        let label = record.get(1).unwrap_or("").to_string();
        any_label |= !label.is_empty();
        labels.push(label);
    }
    let seq = if any_label {
        ObservationSequence::with_labels(values, labels)
    } else {
        ObservationSequence::new(values)
    };
    seq.map_err(|e| parse_err(path, e.to_string()))
}

/// A rectangular-or-ragged numeric table; shape checks are up to the caller.
/// `inf`, `-inf` and `nan` are accepted spellings so callers can reject them
/// with a precise message.
pub fn read_numeric_rows(path: &Path, delimiter: u8, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let offset = if has_header { 2 } else { 1 };
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                parse_float(field).ok_or_else(|| {
                    parse_err(
                        path,
                        format!(
                            "line {}, column {}: `{field}` is not a number",
                            line + offset,
                            col + 1
                        ),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn parse_float(field: &str) -> Option<f64> {
    match field {
        "-Inf" | "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "Inf" | "inf" | "Infinity" => Some(f64::INFINITY),
        "NaN" | "nan" | "NA" => Some(f64::NAN),
        _ => field.parse().ok(),
    }
}
