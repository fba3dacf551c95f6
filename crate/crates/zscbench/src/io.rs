//! Dataset directories and persisted models.
//!
//! A dataset directory holds `meta.json`, `features.csv`, `labels.csv`,
//! `attributes.csv` and optionally `classes.txt`. Matrices are headerless
//! comma-separated decimals; every real is written with 17 significant digits
//! so a save/load cycle reproduces the values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use zsc_core::{ClassSet, CompatibilityModel, Dataset, Matrix};

use crate::error::{BenchError, Result};

/// Shape declaration stored in `meta.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub num_samples: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub attr_dim: usize,
}

/// Formats a real with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

fn parse_matrix(text: &str, file: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if row > rows {
            return Err(BenchError::format(file, row, format!("more than the {rows} rows declared in meta.json")));
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols {
            return Err(BenchError::format(
                file,
                row,
                format!("dimension mismatch: {} values, expected {cols}", cells.len()),
            ));
        }
        for cell in cells {
            let v: f64 = cell
                .parse()
                .map_err(|_| BenchError::format(file, row, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(BenchError::format(file, row, format!("non-finite value {cell:?}")));
            }
            data.push(v);
        }
        count = row;
    }
    if count != rows {
        return Err(BenchError::format(file, count, format!("dimension mismatch: {count} rows, expected {rows}")));
    }
    Ok(Matrix::from_vec(rows, cols, data).expect("sized while parsing"))
}

fn parse_labels(text: &str, num_samples: usize, num_classes: usize) -> Result<Vec<usize>> {
    let file = "labels.csv";
    let mut labels = Vec::with_capacity(num_samples);
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let cell = line.trim();
        let v: usize =
            cell.parse().map_err(|_| BenchError::format(file, row, format!("non-numeric cell {cell:?}")))?;
        if v >= num_classes {
            return Err(BenchError::format(file, row, format!("label out of range ({v} >= {num_classes})")));
        }
        labels.push(v);
    }
    if labels.len() != num_samples {
        return Err(BenchError::format(
            file,
            labels.len(),
            format!("dimension mismatch: {} labels, expected {num_samples}", labels.len()),
        ));
    }
    Ok(labels)
}

/// Reads a dataset directory and checks it against `meta.json`.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_text = read(&dir.join("meta.json"))?;
    let meta: DatasetMeta =
        serde_json::from_str(&meta_text).map_err(|e| BenchError::format("meta.json", 0, e.to_string()))?;
    let features = parse_matrix(&read(&dir.join("features.csv"))?, "features.csv", meta.num_samples, meta.feature_dim)?;
    let labels = parse_labels(&read(&dir.join("labels.csv"))?, meta.num_samples, meta.num_classes)?;
    let attributes =
        parse_matrix(&read(&dir.join("attributes.csv"))?, "attributes.csv", meta.num_classes, meta.attr_dim)?;
    let names_path = dir.join("classes.txt");
    let class_names = if names_path.exists() {
        let names: Vec<String> = read(&names_path)?.lines().map(|l| l.trim_end().to_string()).collect();
        if names.len() != meta.num_classes {
            return Err(BenchError::format(
                "classes.txt",
                names.len(),
                format!("{} names for {} classes", names.len(), meta.num_classes),
            ));
        }
        Some(names)
    } else {
        None
    };
    Dataset::new(features, labels, attributes, class_names).map_err(|e| BenchError::core(dir.display().to_string(), e))
}

/// Renders a matrix as headerless CSV.
pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Writes a dataset directory, creating it if needed.
pub fn save_dataset(d: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let meta = DatasetMeta {
        num_samples: d.num_samples(),
        feature_dim: d.feature_dim(),
        num_classes: d.num_classes(),
        attr_dim: d.attr_dim(),
    };
    write(&dir.join("meta.json"), &(serde_json::to_string_pretty(&meta).expect("plain struct") + "\n"))?;
    write(&dir.join("features.csv"), &matrix_csv(d.features()))?;
    let mut labels = String::new();
    for l in d.labels() {
        writeln!(labels, "{l}").expect("string write");
    }
    write(&dir.join("labels.csv"), &labels)?;
    write(&dir.join("attributes.csv"), &matrix_csv(d.attributes()))?;
    if let Some(names) = d.class_names() {
        write(&dir.join("classes.txt"), &(names.join("\n") + "\n"))?;
    }
    Ok(())
}

/// Contents of `model_meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub feature_dim: usize,
    pub attr_dim: usize,
    pub trained_classes: Vec<usize>,
    /// Trainer name and hyperparameters, as given in the experiment config.
    pub params: serde_json::Value,
}

/// Writes `model.csv` and `model_meta.json` into `dir`.
pub fn save_model(model: &CompatibilityModel, params: serde_json::Value, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write(&dir.join("model.csv"), &matrix_csv(model.weight()))?;
    let meta = ModelMeta {
        feature_dim: model.feature_dim(),
        attr_dim: model.attr_dim(),
        trained_classes: model.trained_classes().as_slice().to_vec(),
        params,
    };
    write(&dir.join("model_meta.json"), &(serde_json::to_string_pretty(&meta).expect("plain struct") + "\n"))
}

/// Reads a model written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<(CompatibilityModel, ModelMeta)> {
    let meta: ModelMeta = serde_json::from_str(&read(&dir.join("model_meta.json"))?)
        .map_err(|e| BenchError::format("model_meta.json", 0, e.to_string()))?;
    let weight = parse_matrix(&read(&dir.join("model.csv"))?, "model.csv", meta.feature_dim, meta.attr_dim)?;
    let model = CompatibilityModel::new(weight, ClassSet::new(meta.trained_classes.iter().copied()))
        .map_err(|e| BenchError::core(dir.display().to_string(), e))?;
    Ok((model, meta))
}
