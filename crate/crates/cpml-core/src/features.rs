//! Dense labeled feature matrix: the common currency between featurization,
//! PLS reduction and the classifiers.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;

use crate::data::{ryu_format, Label, VitalRecord};
use crate::error::{Error, Result};
use crate::text::DocumentTermMatrix;
use crate::vitals::{featurize_record, VITAL_FEATURE_NAMES};

/// Row-aligned ids, labels and feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(
        ids: Vec<String>,
        labels: Vec<Label>,
        feature_names: Vec<String>,
        values: Array2<f64>,
    ) -> Result<FeatureMatrix> {
        if ids.len() != values.nrows() || labels.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: ids.len().min(labels.len()),
            });
        }
        if feature_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: feature_names.len(),
            });
        }
        Ok(FeatureMatrix {
            ids,
            labels,
            feature_names,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Labels as ±1.0, aligned with rows.
    pub fn signed_labels(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.signed()).collect()
    }

    /// One 29-feature row per vital record, in input order.
    pub fn from_vital_records(records: &[VitalRecord]) -> Result<FeatureMatrix> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut values = Array2::zeros((records.len(), VITAL_FEATURE_NAMES.len()));
        for (i, record) in records.iter().enumerate() {
            let row = featurize_record(record)?;
            for (j, v) in row.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        FeatureMatrix::new(
            records.iter().map(|r| r.record_id.clone()).collect(),
            records.iter().map(|r| r.label).collect(),
            VITAL_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            values,
        )
    }

    /// Densifies a document-term matrix; labels must align with its rows.
    pub fn from_dtm(dtm: &DocumentTermMatrix, labels: &[Label]) -> Result<FeatureMatrix> {
        if labels.len() != dtm.n_docs() {
            return Err(Error::DimensionMismatch {
                expected: dtm.n_docs(),
                actual: labels.len(),
            });
        }
        let rows: Vec<usize> = (0..dtm.n_docs()).collect();
        FeatureMatrix::new(
            dtm.doc_ids.clone(),
            labels.to_vec(),
            dtm.vocabulary.terms().to_vec(),
            dtm.dense_rows(&rows),
        )
    }

    /// Rows for the given ids, in the order given.
    pub fn subset_by_ids(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let positions: BTreeMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut values = Array2::zeros((ids.len(), self.n_features()));
        let mut labels = Vec::with_capacity(ids.len());
        for (r, id) in ids.iter().enumerate() {
            let &i = positions
                .get(id.as_str())
                .ok_or_else(|| Error::Config(format!("id {id:?} not present in feature matrix")))?;
            values.row_mut(r).assign(&self.values.row(i));
            labels.push(self.labels[i]);
        }
        FeatureMatrix::new(ids.to_vec(), labels, self.feature_names.clone(), values)
    }

    /// Dense export: header `record_id` + feature names, one row per record.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["record_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        writer.write_record(&header).map_err(|e| Error::Csv {
            file: path.display().to_string(),
            row: 1,
            message: e.to_string(),
        })?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.values.row(i).iter().map(|&v| ryu_format(v)));
            writer.write_record(&row).map_err(|e| Error::Csv {
                file: path.display().to_string(),
                row: i + 2,
                message: e.to_string(),
            })?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a dense export back; labels are joined from the original data
    /// by id, since feature files carry ids only.
    pub fn load_csv(path: &Path, labels: &BTreeMap<String, Label>) -> Result<FeatureMatrix> {
        let file = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new().from_path(path)?;
        let header = reader.headers().map_err(|e| Error::Csv {
            file: file.clone(),
            row: 1,
            message: e.to_string(),
        })?;
        if header.get(0) != Some("record_id") {
            return Err(Error::Csv {
                file,
                row: 1,
                message: "first column must be record_id".into(),
            });
        }
        let feature_names: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();
        let mut ids = Vec::new();
        let mut row_labels = Vec::new();
        let mut data = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row_no = i + 2;
            let row = row.map_err(|e| Error::Csv {
                file: file.clone(),
                row: row_no,
                message: e.to_string(),
            })?;
            if row.len() != feature_names.len() + 1 {
                return Err(Error::Csv {
                    file: file.clone(),
                    row: row_no,
                    message: format!(
                        "expected {} fields, found {}",
                        feature_names.len() + 1,
                        row.len()
                    ),
                });
            }
            let id = row[0].to_string();
            let label = labels.get(&id).copied().ok_or_else(|| Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "record_id".into(),
                message: format!("no label known for id {id:?}"),
            })?;
            for (j, field) in row.iter().enumerate().skip(1) {
                let v: f64 = field.parse().map_err(|_| Error::InvalidField {
                    file: file.clone(),
                    row: row_no,
                    column: feature_names[j - 1].clone(),
                    message: format!("not a number: {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidField {
                        file: file.clone(),
                        row: row_no,
                        column: feature_names[j - 1].clone(),
                        message: format!("not finite: {field:?}"),
                    });
                }
                data.push(v);
            }
            ids.push(id);
            row_labels.push(label);
        }
        if ids.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let values = Array2::from_shape_vec((ids.len(), feature_names.len()), data)
            .expect("row-major data matches shape");
        FeatureMatrix::new(ids, row_labels, feature_names, values)
    }
}
