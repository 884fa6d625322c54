//! Record schemas and CSV ingestion for labeled note and vital-sign datasets.
//!
//! Two on-disk schemas, both UTF-8 CSV with a mandatory header row:
//!
//! * notes: `admission_id,label,text` — `text` is RFC-4180 quoted so notes may
//!   embed commas and newlines; an empty cell means the note text is absent.
//! * vitals: `record_id,label,signal,value` — long format, one sample per row,
//!   `signal` one of `HR`, `SPO2`, `RR`. Rows are grouped by `record_id` in
//!   file order.
//!
//! Error messages name the file, the 1-based row (header is row 1) and, where
//! it applies, the column.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Binary COPD outcome. `0` and `1` on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_field(s: &str) -> Option<Label> {
        match s {
            "0" => Some(Label::Negative),
            "1" => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    /// The {-1, +1} encoding used by the classifiers.
    pub fn signed(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// One labeled admission's clinical note. `text: None` marks a missing note
/// body; `clean_text` resolves it to a single space downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteRecord {
    pub admission_id: String,
    pub text: Option<String>,
    pub label: Label,
}

/// One labeled admission's vital-sign series: heart rate (beats/minute),
/// SpO2 (percent) and respiration rate (breaths/minute).
#[derive(Debug, Clone, PartialEq)]
pub struct VitalRecord {
    pub record_id: String,
    pub label: Label,
    pub heart_rate: Vec<f64>,
    pub spo2: Vec<f64>,
    pub resp_rate: Vec<f64>,
}

/// Class counts for a labeled dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LabelSummary {
    pub n_total: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub prevalence: f64,
}

/// Anything carrying an id and a binary label.
pub trait Labeled {
    fn id(&self) -> &str;
    fn label(&self) -> Label;
}

impl Labeled for NoteRecord {
    fn id(&self) -> &str {
        &self.admission_id
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for VitalRecord {
    fn id(&self) -> &str {
        &self.record_id
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for (String, Label) {
    fn id(&self) -> &str {
        &self.0
    }
    fn label(&self) -> Label {
        self.1
    }
}

const NOTE_HEADER: [&str; 3] = ["admission_id", "label", "text"];
const VITAL_HEADER: [&str; 4] = ["record_id", "label", "signal", "value"];

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(Error::Csv {
            file: file_name(path),
            row: 1,
            message: format!("header {:?} does not match expected {:?}", got, want),
        });
    }
    Ok(())
}

/// Loads a labeled note dataset. Row order is preserved; an empty `text`
/// cell becomes `None`.
pub fn load_notes(path: &Path) -> Result<Vec<NoteRecord>> {
    let file = file_name(path);
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    check_header(path, reader.headers().map_err(csv_err(&file, 1))?, &NOTE_HEADER)?;

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(csv_err(&file, row_no))?;
        if row.len() != 3 {
            return Err(Error::Csv {
                file: file.clone(),
                row: row_no,
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let admission_id = row[0].to_string();
        if admission_id.is_empty() {
            return Err(Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "admission_id".into(),
                message: "empty admission_id".into(),
            });
        }
        if seen.insert(admission_id.clone(), row_no).is_some() {
            return Err(Error::DuplicateId {
                file: file.clone(),
                row: row_no,
                id: admission_id,
            });
        }
        let label = Label::from_field(&row[1]).ok_or_else(|| Error::InvalidLabel {
            file: file.clone(),
            row: row_no,
            column: "label".into(),
            value: row[1].to_string(),
        })?;
        let text = if row[2].is_empty() {
            None
        } else {
            Some(row[2].to_string())
        };
        records.push(NoteRecord {
            admission_id,
            text,
            label,
        });
    }
    Ok(records)
}

/// Writes notes in the schema `load_notes` reads. `None` text becomes an
/// empty cell, so load/write round-trips.
pub fn write_notes(path: &Path, records: &[NoteRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer
        .write_record(NOTE_HEADER)
        .map_err(csv_err(&file_name(path), 1))?;
    for (i, rec) in records.iter().enumerate() {
        writer
            .write_record([
                rec.admission_id.as_str(),
                &rec.label.to_string(),
                rec.text.as_deref().unwrap_or(""),
            ])
            .map_err(csv_err(&file_name(path), i + 2))?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_err(file: &str, row: usize) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        file: file.to_string(),
        row,
        message: e.to_string(),
    }
}

/// Loads a long-format vitals dataset, grouping rows into one record per
/// `record_id` (order of first appearance). Values are checked for
/// finiteness but not for physiologic plausibility; range screening is a
/// reporting concern, not a load failure.
pub fn load_vitals(path: &Path) -> Result<Vec<VitalRecord>> {
    let file = file_name(path);
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    check_header(path, reader.headers().map_err(csv_err(&file, 1))?, &VITAL_HEADER)?;

    let mut records: Vec<VitalRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(csv_err(&file, row_no))?;
        if row.len() != 4 {
            return Err(Error::Csv {
                file: file.clone(),
                row: row_no,
                message: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let record_id = row[0].to_string();
        if record_id.is_empty() {
            return Err(Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "record_id".into(),
                message: "empty record_id".into(),
            });
        }
        let label = Label::from_field(&row[1]).ok_or_else(|| Error::InvalidLabel {
            file: file.clone(),
            row: row_no,
            column: "label".into(),
            value: row[1].to_string(),
        })?;
        let value: f64 = row[3].parse().map_err(|_| Error::InvalidField {
            file: file.clone(),
            row: row_no,
            column: "value".into(),
            message: format!("non-numeric value {:?}", &row[3]),
        })?;
        if !value.is_finite() {
            return Err(Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "value".into(),
                message: format!("non-finite value {:?}", &row[3]),
            });
        }

        let idx = match index.get(&record_id) {
            Some(&idx) => {
                if records[idx].label != label {
                    return Err(Error::InvalidField {
                        file: file.clone(),
                        row: row_no,
                        column: "label".into(),
                        message: format!("conflicting label for record {:?}", record_id),
                    });
                }
                idx
            }
            None => {
                records.push(VitalRecord {
                    record_id: record_id.clone(),
                    label,
                    heart_rate: Vec::new(),
                    spo2: Vec::new(),
                    resp_rate: Vec::new(),
                });
                index.insert(record_id, records.len() - 1);
                records.len() - 1
            }
        };
        match &row[2] {
            "HR" => records[idx].heart_rate.push(value),
            "SPO2" => records[idx].spo2.push(value),
            "RR" => records[idx].resp_rate.push(value),
            other => {
                return Err(Error::UnknownSignal {
                    file: file.clone(),
                    row: row_no,
                    column: "signal".into(),
                    signal: other.to_string(),
                })
            }
        }
    }

    for rec in &records {
        for (signal, series) in [
            ("HR", &rec.heart_rate),
            ("SPO2", &rec.spo2),
            ("RR", &rec.resp_rate),
        ] {
            if series.is_empty() {
                return Err(Error::EmptySeries {
                    record_id: rec.record_id.clone(),
                    signal: signal.into(),
                });
            }
        }
    }
    Ok(records)
}

/// Writes vitals in the schema `load_vitals` reads. Per record, HR rows come
/// first, then SPO2, then RR; within a signal the sample order is kept.
pub fn write_vitals(path: &Path, records: &[VitalRecord]) -> Result<()> {
    let file = file_name(path);
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(VITAL_HEADER).map_err(csv_err(&file, 1))?;
    let mut row_no = 1;
    for rec in records {
        let label = rec.label.to_string();
        for (signal, series) in [
            ("HR", &rec.heart_rate),
            ("SPO2", &rec.spo2),
            ("RR", &rec.resp_rate),
        ] {
            for &v in series.iter() {
                row_no += 1;
                let mut buf = ryu_format(v);
                writer
                    .write_record([rec.record_id.as_str(), &label, signal, &mut buf])
                    .map_err(csv_err(&file, row_no))?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Shortest decimal representation that parses back to the same f64.
pub(crate) fn ryu_format(v: f64) -> String {
    let mut s = serde_json::to_string(&v).unwrap_or_else(|_| v.to_string());
    // serde_json writes integral floats without a fraction; keep as-is.
    if s == "null" {
        s = v.to_string();
    }
    s
}

/// Exact class counts over any labeled collection.
pub fn summarize_labels<R: Labeled>(records: &[R]) -> Result<LabelSummary> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_positive = records.iter().filter(|r| r.label().is_positive()).count();
    let n_total = records.len();
    Ok(LabelSummary {
        n_total,
        n_positive,
        n_negative: n_total - n_positive,
        prevalence: n_positive as f64 / n_total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_note_rows() {
        let f = write_file("admission_id,label,text\nh001,1,\"wheezing, severe\"\nh002,0,stable\n");
        let records = load_notes(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].admission_id, "h001");
        assert_eq!(records[0].label, Label::Positive);
        assert_eq!(records[0].text.as_deref(), Some("wheezing, severe"));
        let summary = summarize_labels(&records).unwrap();
        assert_eq!(
            (summary.n_total, summary.n_positive, summary.n_negative),
            (2, 1, 1)
        );
        assert_eq!(summary.prevalence, 0.5);
    }

    #[test]
    fn empty_text_cell_is_absent() {
        let f = write_file("admission_id,label,text\nh001,1,\n");
        let records = load_notes(f.path()).unwrap();
        assert_eq!(records[0].text, None);
    }

    #[test]
    fn multiline_note_round_trips() {
        let records = vec![
            NoteRecord {
                admission_id: "h001".into(),
                text: Some("line one\r\nline two, with comma".into()),
                label: Label::Positive,
            },
            NoteRecord {
                admission_id: "h002".into(),
                text: None,
                label: Label::Negative,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_notes(f.path(), &records).unwrap();
        let reloaded = load_notes(f.path()).unwrap();
        assert_eq!(records, reloaded);
    }

    #[test]
    fn duplicate_admission_id_names_the_id() {
        let f = write_file("admission_id,label,text\nh001,1,a\nh001,0,b\n");
        let err = load_notes(f.path()).unwrap_err().to_string();
        assert!(err.contains("h001"), "{err}");
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn label_outside_binary_rejected() {
        let f = write_file("admission_id,label,text\nh001,2,a\n");
        let err = load_notes(f.path()).unwrap_err().to_string();
        assert!(err.contains("label"), "{err}");
    }

    #[test]
    fn vitals_grouped_in_file_order() {
        let f = write_file(
            "record_id,label,signal,value\n\
             r1,1,HR,80\nr1,1,HR,82\nr1,1,SPO2,97\nr1,1,SPO2,96\nr1,1,RR,15\nr1,1,RR,16\n",
        );
        let records = load_vitals(f.path()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].heart_rate, vec![80.0, 82.0]);
        assert_eq!(records[0].spo2, vec![97.0, 96.0]);
        assert_eq!(records[0].resp_rate, vec![15.0, 16.0]);
    }

    #[test]
    fn unknown_signal_rejected() {
        let f = write_file("record_id,label,signal,value\nr1,1,ABP,120\n");
        let err = load_vitals(f.path()).unwrap_err().to_string();
        assert!(err.contains("unknown signal"), "{err}");
        assert!(err.contains("ABP"), "{err}");
    }

    #[test]
    fn non_numeric_value_rejected() {
        let f = write_file("record_id,label,signal,value\nr1,1,HR,abc\n");
        let err = load_vitals(f.path()).unwrap_err().to_string();
        assert!(err.contains("non-numeric"), "{err}");
    }

    #[test]
    fn missing_signal_series_rejected() {
        let f = write_file("record_id,label,signal,value\nr1,1,HR,80\nr1,1,SPO2,97\n");
        let err = load_vitals(f.path()).unwrap_err().to_string();
        assert!(err.contains("RR"), "{err}");
    }

    #[test]
    fn out_of_range_spo2_loads() {
        // Plausibility screening is not a load failure.
        let f = write_file("record_id,label,signal,value\nr1,1,HR,80\nr1,1,SPO2,101\nr1,1,RR,15\n");
        let records = load_vitals(f.path()).unwrap();
        assert_eq!(records[0].spo2, vec![101.0]);
    }

    #[test]
    fn vitals_round_trip() {
        let records = vec![VitalRecord {
            record_id: "r1".into(),
            label: Label::Negative,
            heart_rate: vec![80.5, 81.25],
            spo2: vec![97.0],
            resp_rate: vec![15.0, 14.0, 16.0],
        }];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_vitals(f.path(), &records).unwrap();
        assert_eq!(load_vitals(f.path()).unwrap(), records);
    }

    #[test]
    fn conflicting_label_rejected() {
        let f = write_file("record_id,label,signal,value\nr1,1,HR,80\nr1,0,RR,15\n");
        let err = load_vitals(f.path()).unwrap_err().to_string();
        assert!(err.contains("conflicting label"), "{err}");
    }

    #[test]
    fn reported_cohort_prevalences() {
        let mut records: Vec<(String, Label)> = Vec::new();
        for i in 0..31667usize {
            let label = if i < 354 { Label::Positive } else { Label::Negative };
            records.push((format!("h{i}"), label));
        }
        let s = summarize_labels(&records).unwrap();
        assert!((s.prevalence - 0.01118).abs() < 5e-6, "{}", s.prevalence);

        let mut records: Vec<(String, Label)> = Vec::new();
        for i in 0..10489usize {
            let label = if i < 2551 { Label::Positive } else { Label::Negative };
            records.push((format!("r{i}"), label));
        }
        let s = summarize_labels(&records).unwrap();
        assert!((s.prevalence - 0.2432).abs() < 5e-5, "{}", s.prevalence);
    }

    #[test]
    fn all_positive_prevalence_is_one() {
        let records: Vec<(String, Label)> = (0..3)
            .map(|i| (format!("h{i}"), Label::Positive))
            .collect();
        assert_eq!(summarize_labels(&records).unwrap().prevalence, 1.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let records: Vec<(String, Label)> = Vec::new();
        assert!(matches!(
            summarize_labels(&records),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn summary_is_permutation_invariant() {
        let forward: Vec<(String, Label)> = (0..10)
            .map(|i| {
                let label = if i % 3 == 0 { Label::Positive } else { Label::Negative };
                (format!("h{i}"), label)
            })
            .collect();
        let mut reversed = forward.clone();
        reversed.reverse();
        let a = summarize_labels(&forward).unwrap();
        let b = summarize_labels(&reversed).unwrap();
        assert_eq!(a.n_positive, b.n_positive);
        assert_eq!(a.prevalence, b.prevalence);
    }
}
