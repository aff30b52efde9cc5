use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use crate::data::{Label, LabeledDataset, LabeledSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvOptions {
    pub label_column: String,
    pub tag_column: Option<String>,
    /// Non-feature columns to skip (ids, free text).
    pub ignore_columns: Vec<String>,
    /// When set, rows whose label equals this value are positive and all
    /// others negative. Otherwise labels must be `0`/`1` or `neg`/`pos`.
    pub positive_value: Option<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: LabeledDataset,
    /// Rows skipped because a feature cell was empty.
    pub dropped: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

fn parse_label(cell: &str, options: &CsvOptions) -> Option<Label> {
    let c = cell.trim();
    if let Some(pos) = &options.positive_value {
        return Some(if c == pos {
            Label::Positive
        } else {
            Label::Negative
        });
    }
    match c.to_ascii_lowercase().as_str() {
        "1" | "pos" | "positive" => Some(Label::Positive),
        "0" | "neg" | "negative" => Some(Label::Negative),
        _ => None,
    }
}

/// Reads a headered CSV file into a labeled dataset. Every column other
/// than the label, tag and ignored columns is a numeric feature. Rows with a
/// missing feature cell are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CsvLoad> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::parse(path, e.to_string()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, format!("no column named {name:?}")))
    };
    let label_col = find(&options.label_column)?;
    let tag_col = options.tag_column.as_deref().map(find).transpose()?;
    let mut skip = vec![label_col];
    skip.extend(tag_col);
    for name in &options.ignore_columns {
        skip.push(find(name)?);
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|c| !skip.contains(c)).collect();
    if feature_cols.is_empty() {
        return Err(Error::parse(path, "no feature columns"));
    }

    let mut samples = Vec::new();
    let mut tags = Vec::new();
    let mut tag_ids: HashMap<String, u32> = HashMap::new();
    let mut dropped = 0;
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        if feature_cols.iter().any(|&c| is_missing(&record[c])) {
            dropped += 1;
            continue;
        }
        let label = parse_label(&record[label_col], options).ok_or_else(|| {
            Error::parse(
                path,
                format!(
                    "line {line}: label {:?} is not one of 0/1/neg/pos",
                    &record[label_col]
                ),
            )
        })?;
        let x = feature_cols
            .iter()
            .map(|&c| {
                record[c].trim().parse::<f64>().map_err(|_| {
                    Error::parse(
                        path,
                        format!(
                            "line {line}, column {:?}: cannot parse {:?} as a number",
                            &headers[c], &record[c]
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tag = match tag_col {
            None => None,
            Some(c) if is_missing(&record[c]) => None,
            Some(c) => {
                let cell = record[c].trim();
                Some(match cell.parse::<u32>() {
                    Ok(v) => v,
                    Err(_) => {
                        let next = tag_ids.len() as u32;
                        *tag_ids.entry(cell.to_string()).or_insert(next)
                    }
                })
            }
        };
        samples.push(LabeledSample::new(x, label));
        tags.push(tag);
    }
    let mut dataset = LabeledDataset::new(samples, tags)?
        .with_meta("source", Value::from(path.display().to_string()))
        .with_meta("dropped_rows", Value::from(dropped));
    if !tag_ids.is_empty() {
        let mut names: Vec<(&String, &u32)> = tag_ids.iter().collect();
        names.sort_by_key(|(_, v)| **v);
        dataset = dataset.with_meta(
            "tag_names",
            Value::from(names.into_iter().map(|(k, _)| k.clone()).collect::<Vec<_>>()),
        );
    }
    Ok(CsvLoad { dataset, dropped })
}
