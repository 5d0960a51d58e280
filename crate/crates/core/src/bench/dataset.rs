//! Dataset ingestion from CSV, plus a synthetic two-Gaussian generator.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// A binary classification dataset with named feature columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vector,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(name: String, x: Matrix, y: Vector, feature_names: Vec<String>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(Error::invalid("Dataset: need at least two rows"));
        }
        if x.nrows() != y.len() {
            return Err(Error::dims(format!(
                "Dataset: {} rows vs {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::dims(format!(
                "Dataset: {} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Dataset: features".into()));
        }
        if !y.iter().all(|&v| v == 0.0 || v == 1.0) {
            return Err(Error::invalid("Dataset: labels must be 0 or 1"));
        }
        let positives = y.iter().filter(|&&v| v == 1.0).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::invalid("Dataset: both classes must be present"));
        }
        Ok(Dataset {
            name,
            x,
            y,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Fraction of objects in the larger class.
    pub fn majority_fraction(&self) -> f64 {
        let pos = self.y.iter().filter(|&&v| v == 1.0).count() as f64;
        let frac = pos / self.n() as f64;
        frac.max(1.0 - frac)
    }
}

/// Load a headered CSV, mapping `label_column` to `{0,1}` with
/// `positive_label` as class 1 and every feature column parsed as `f64`.
pub fn load_dataset_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let dataset_err = |row: Option<usize>, message: String| Error::Dataset {
        path: display.clone(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| dataset_err(None, e.to_string()))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| dataset_err(None, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| dataset_err(None, format!("unknown label column '{label_column}'")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Row numbers reported to the user count the header as row 1.
        let row_no = i + 2;
        let record = record.map_err(|e| dataset_err(Some(row_no), e.to_string()))?;
        if record.len() != headers.len() {
            return Err(dataset_err(
                Some(row_no),
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut features = Vec::with_capacity(headers.len() - 1);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                dataset_err(
                    Some(row_no),
                    format!("non-numeric feature '{}' in column '{}'", field, headers[j]),
                )
            })?;
            if !value.is_finite() {
                return Err(dataset_err(
                    Some(row_no),
                    format!("non-finite feature in column '{}'", headers[j]),
                ));
            }
            features.push(value);
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(dataset_err(None, "no data rows".into()));
    }
    let distinct: BTreeSet<&String> = raw_labels.iter().collect();
    if distinct.len() != 2 {
        return Err(dataset_err(
            None,
            format!("non-binary labels: found {} distinct values", distinct.len()),
        ));
    }
    if !distinct.iter().any(|l| l.as_str() == positive_label) {
        return Err(dataset_err(
            None,
            format!("positive label '{positive_label}' not present in column '{label_column}'"),
        ));
    }

    let d = feature_names.len();
    let mut x = Matrix::zeros(rows.len(), d);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    let y = Vector::from_iterator(
        raw_labels.len(),
        raw_labels.iter().map(|l| f64::from(l == positive_label)),
    );

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    Dataset::new(name, x, y, feature_names)
}

/// A balanced two-class dataset with 2-D Gaussian classes centered at
/// `(-separation, 0)` and `(+separation, 0)` with unit covariance.
pub fn synthetic_two_gaussians(n: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::invalid("synthetic_two_gaussians: need n >= 4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut labels: Vec<f64> = (0..n).map(|i| f64::from(i % 2 == 1)).collect();
    labels.shuffle(&mut rng);

    let mut x = Matrix::zeros(n, 2);
    for (i, &label) in labels.iter().enumerate() {
        let center = if label == 1.0 { separation } else { -separation };
        x[(i, 0)] = center + noise.sample(&mut rng);
        x[(i, 1)] = noise.sample(&mut rng);
    }
    Dataset::new(
        "gauss2".to_string(),
        x,
        Vector::from_vec(labels),
        vec!["x1".to_string(), "x2".to_string()],
    )
}
