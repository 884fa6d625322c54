//! Train/validation splitting and prevalence adjustment: balance the
//! training set by downsampling negatives and move the leftovers into
//! validation.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Label, Labeled};
use crate::error::{Error, Result};

/// A random train/validation partition. Both id lists preserve the original
/// record order.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// A split after prevalence adjustment: training holds equally many
/// positives and negatives; surplus training negatives were appended to
/// validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedSplit {
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub moved_ids: Vec<String>,
}

/// Uniformly samples `amount` distinct indices from `0..n` (ChaCha8-driven
/// partial Fisher–Yates), returned in ascending order.
fn sample_indices(n: usize, amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(amount <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..amount {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut chosen = idx[..amount].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Random partition without replacement; `|train| = round(train_fraction × n)`.
/// No stratification is applied.
pub fn split<R: Labeled>(records: &[R], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_positive = records.iter().filter(|r| r.label().is_positive()).count();
    if n_positive == 0 || n_positive == records.len() {
        return Err(Error::SingleClass);
    }
    let n = records.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = sample_indices(n, n_train, &mut rng);
    let in_train: HashSet<usize> = chosen.iter().copied().collect();
    let mut train_ids = Vec::with_capacity(n_train);
    let mut validation_ids = Vec::with_capacity(n - n_train);
    for (i, record) in records.iter().enumerate() {
        if in_train.contains(&i) {
            train_ids.push(record.id().to_string());
        } else {
            validation_ids.push(record.id().to_string());
        }
    }
    Ok(Split {
        train_ids,
        validation_ids,
        seed,
        train_fraction,
    })
}

/// Downsamples training negatives to the training positive count, appending
/// the removed ids to validation. A training set with no negative majority
/// is returned unchanged.
pub fn balance_training<R: Labeled>(
    split: &Split,
    records: &[R],
    seed: u64,
) -> Result<BalancedSplit> {
    let labels: BTreeMap<&str, Label> = records.iter().map(|r| (r.id(), r.label())).collect();
    let mut train_labels = Vec::with_capacity(split.train_ids.len());
    for id in &split.train_ids {
        let label = labels
            .get(id.as_str())
            .ok_or_else(|| Error::Config(format!("split id {id:?} missing from records")))?;
        train_labels.push(*label);
    }
    let n_positive = train_labels.iter().filter(|l| l.is_positive()).count();
    if n_positive == 0 {
        return Err(Error::NoTrainingPositives);
    }
    let negatives: Vec<usize> = train_labels
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_positive())
        .map(|(i, _)| i)
        .collect();
    if negatives.len() <= n_positive {
        return Ok(BalancedSplit {
            train_ids: split.train_ids.clone(),
            validation_ids: split.validation_ids.clone(),
            moved_ids: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept: HashSet<usize> = sample_indices(negatives.len(), n_positive, &mut rng)
        .into_iter()
        .map(|k| negatives[k])
        .collect();
    let mut train_ids = Vec::with_capacity(2 * n_positive);
    let mut moved_ids = Vec::with_capacity(negatives.len() - n_positive);
    for (i, id) in split.train_ids.iter().enumerate() {
        if train_labels[i].is_positive() || kept.contains(&i) {
            train_ids.push(id.clone());
        } else {
            moved_ids.push(id.clone());
        }
    }
    let mut validation_ids = split.validation_ids.clone();
    validation_ids.extend(moved_ids.iter().cloned());
    Ok(BalancedSplit {
        train_ids,
        validation_ids,
        moved_ids,
    })
}

/// Writes the split as a two-column CSV: `id,assignment` with assignment in
/// {train, validation}; training rows first.
pub fn write_manifest(path: &Path, train_ids: &[String], validation_ids: &[String]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let wrap = |e: csv::Error| Error::Csv {
        file: path.display().to_string(),
        row: 0,
        message: e.to_string(),
    };
    writer.write_record(["id", "assignment"]).map_err(wrap)?;
    for id in train_ids {
        writer.write_record([id.as_str(), "train"]).map_err(wrap)?;
    }
    for id in validation_ids {
        writer
            .write_record([id.as_str(), "validation"])
            .map_err(wrap)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a split manifest back as (train ids, validation ids), preserving
/// file order within each assignment.
pub fn read_manifest(path: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Csv {
            file: file.clone(),
            row: row_no,
            message: e.to_string(),
        })?;
        let id = row[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                file: file.clone(),
                row: row_no,
                id,
            });
        }
        match &row[1] {
            "train" => train.push(id),
            "validation" => validation.push(id),
            other => {
                return Err(Error::InvalidField {
                    file: file.clone(),
                    row: row_no,
                    column: "assignment".into(),
                    message: format!("expected train or validation, got {other:?}"),
                })
            }
        }
    }
    if train.is_empty() && validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((train, validation))
}
