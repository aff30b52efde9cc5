use std::fs;
use std::path::{Path, PathBuf};

use cpca::datasets::{load_csv, CsvOptions};
use cpca::{LabeledDataset, SubspaceModel};
use serde_json::Value;

use crate::cli::{CsvArgs, DataArgs};
use crate::error::{io_err, CliError, CliResult};

pub mod check;
pub mod eval;
pub mod fit;
pub mod gen;
pub mod plot;
pub mod stream;
pub mod sweep;

pub const OUT_DIR_VAR: &str = "CPCA_OUT_DIR";

/// Model metadata key holding the per-feature scale applied before fitting.
pub const SCALE_KEY: &str = "feature_scale";

pub fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// The explicit path, or `name` inside the default output directory.
pub fn resolve(out: &Option<PathBuf>, name: &str) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => out_dir().join(name),
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn csv_options(args: &CsvArgs) -> CsvOptions {
    CsvOptions {
        label_column: args.label_column.clone(),
        tag_column: args.tag_column.clone(),
        ignore_columns: args.ignore_columns.clone(),
        positive_value: args.positive_value.clone(),
    }
}

/// Reads a CSV (by extension) or JSON-lines dataset.
pub fn load_any(path: &Path, csv: &CsvArgs) -> CliResult<LabeledDataset> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        let load = load_csv(path, &csv_options(csv))?;
        if load.dropped > 0 {
            eprintln!("dropped {} rows with missing values", load.dropped);
        }
        Ok(load.dataset)
    } else {
        Ok(LabeledDataset::load_jsonl(path)?)
    }
}

pub struct Loaded {
    pub data: LabeledDataset,
    /// Per-feature divisors applied when `--normalize` was given.
    pub scale: Option<Vec<f64>>,
}

pub fn load_data(args: &DataArgs) -> CliResult<Loaded> {
    let raw = load_any(&args.data, &args.csv)?;
    if args.normalize {
        let (data, scale) = raw.standardized()?;
        Ok(Loaded {
            data,
            scale: Some(scale),
        })
    } else {
        Ok(Loaded {
            data: raw,
            scale: None,
        })
    }
}

pub fn model_scale(model: &SubspaceModel) -> CliResult<Option<Vec<f64>>> {
    match model.meta.get(SCALE_KEY) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())
            .map(Some)
            .map_err(|e| CliError::Core(e.into())),
    }
}

/// Applies the model's stored feature scale, if any, to raw data.
pub fn apply_model_scale(model: &SubspaceModel, data: LabeledDataset) -> CliResult<LabeledDataset> {
    match model_scale(model)? {
        Some(scale) => Ok(data.scaled_per_feature(&scale)?),
        None => Ok(data),
    }
}

pub fn fmt_values(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}
