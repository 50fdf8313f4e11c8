//! Tabular datasets: CSV ingestion and label-derived global trends.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major feature matrix with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_rows: usize,
    n_features: usize,
    labels: Option<Vec<u8>>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows, validating shape, finiteness and labels.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<u8>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n_rows = rows.len();
        let n_features = match (rows.first(), &feature_names) {
            (Some(r), _) => r.len(),
            (None, Some(names)) => names.len(),
            (None, None) => 0,
        };
        let mut features = Vec::with_capacity(n_rows * n_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i + 1,
                    column: feature_names
                        .as_ref()
                        .and_then(|n| n.get(j).cloned())
                        .unwrap_or_else(|| j.to_string()),
                    message: "non-finite value".into(),
                });
            }
            features.extend(row);
        }
        if let Some(labels) = &labels {
            if labels.len() != n_rows {
                return Err(Error::LengthMismatch {
                    left: n_rows,
                    right: labels.len(),
                });
            }
            if let Some(i) = labels.iter().position(|&y| y > 1) {
                return Err(Error::NonBinaryLabel {
                    row: i + 1,
                    value: labels[i].to_string(),
                });
            }
        }
        let feature_names = match feature_names {
            Some(names) if names.len() == n_features => names,
            Some(names) => {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: names.len(),
                })
            }
            None => (0..n_features).map(|j| format!("f{j}")).collect(),
        };
        Ok(Self {
            features,
            n_rows,
            n_features,
            labels,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).map(move |i| self.features[i * self.n_features + j])
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Loads a header-first CSV. When `label_column` is given, that column is
    /// parsed as 0/1 labels and removed from the features; the remaining
    /// columns keep their file order.
    pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_csv(file, label_column)
    }

    pub fn read_csv(reader: impl std::io::Read, label_column: Option<&str>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_error(0, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        let label_idx = match label_column {
            Some(name) => Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingColumn(name.to_owned()))?,
            ),
            None => None,
        };
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != label_idx)
            .map(|(_, h)| h.clone())
            .collect();

        let mut rows = Vec::new();
        let mut labels = label_idx.map(|_| Vec::new());
        for (i, record) in rdr.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| csv_error(row_no, e))?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    row: row_no,
                    column: "*".into(),
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            let mut row = Vec::with_capacity(feature_names.len());
            for (j, cell) in record.iter().enumerate() {
                if Some(j) == label_idx {
                    let y = match cell {
                        "0" | "0.0" => 0,
                        "1" | "1.0" => 1,
                        other => {
                            return Err(Error::NonBinaryLabel {
                                row: row_no,
                                value: other.to_owned(),
                            })
                        }
                    };
                    labels.as_mut().expect("label vector").push(y);
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: row_no,
                    column: headers[j].clone(),
                    message: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: row_no,
                        column: headers[j].clone(),
                        message: format!("'{cell}' is not finite"),
                    });
                }
                row.push(v);
            }
            rows.push(row);
        }
        Self::from_rows(rows, labels, Some(feature_names))
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_rows: indices.len(),
            n_features: self.n_features,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

fn csv_error(row: usize, e: csv::Error) -> Error {
    Error::Parse {
        row,
        column: "*".into(),
        message: e.to_string(),
    }
}

/// Per-feature trend in {-1, 0, +1}.
pub type Trend = i8;

/// Sign of the Pearson correlation between each feature column and the
/// labels. Zero-variance columns get trend 0.
pub fn pearson_global_trends(d: &Dataset) -> Result<Vec<Trend>> {
    let labels = d.labels().ok_or(Error::MissingLabels)?;
    if d.n_rows() < 2 {
        return Err(Error::EmptyDataset);
    }
    let n = d.n_rows() as f64;
    let y_mean = labels.iter().map(|&y| y as f64).sum::<f64>() / n;
    let trends = (0..d.n_features())
        .map(|j| {
            let x_mean = d.column(j).sum::<f64>() / n;
            let (mut cov, mut var_x) = (0.0, 0.0);
            for (x, &y) in d.column(j).zip(labels) {
                let dx = x - x_mean;
                cov += dx * (y as f64 - y_mean);
                var_x += dx * dx;
            }
            // The sign of r is the sign of the covariance whenever r is defined.
            if var_x == 0.0 || cov == 0.0 {
                0
            } else if cov > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(trends)
}
