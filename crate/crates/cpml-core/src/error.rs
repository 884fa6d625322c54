//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}: row {row}: {message}")]
    Csv {
        file: String,
        row: usize,
        message: String,
    },

    #[error("{file}: row {row}: duplicate id {id:?}")]
    DuplicateId {
        file: String,
        row: usize,
        id: String,
    },

    #[error("{file}: row {row}, column {column}: invalid label {value:?} (expected 0 or 1)")]
    InvalidLabel {
        file: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{file}: row {row}, column {column}: unknown signal {signal:?} (expected HR, SPO2 or RR)")]
    UnknownSignal {
        file: String,
        row: usize,
        column: String,
        signal: String,
    },

    #[error("{file}: row {row}, column {column}: {message}")]
    InvalidField {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("record {record_id:?}: empty {signal} series")]
    EmptySeries { record_id: String, signal: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty series")]
    EmptyInput,

    #[error("corpus contains no usable non-stop-word tokens")]
    EmptyVocabulary,

    #[error("dataset contains a single class; both labels are required")]
    SingleClass,

    #[error("training set contains no positive records")]
    NoTrainingPositives,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("requested {requested} components but at most {max} are admissible (min of rows-1 and features)")]
    ComponentBound { requested: usize, max: usize },

    #[error("response vector is constant; nothing to fit")]
    ConstantResponse,

    #[error("feature matrix exhausted after {achieved} of {requested} components")]
    RankExhausted { achieved: usize, requested: usize },

    #[error("SMO did not converge within {iterations} iterations (max violation {violation:.3e}, tol {tol:.3e})")]
    SvmNoConvergence {
        iterations: usize,
        violation: f64,
        tol: f64,
    },

    #[error("class {label} has {count} samples; at least 2 are required")]
    ClassTooSmall { label: u8, count: usize },

    #[error("training data is unlearnable under decision stumps (no stump with weighted error below 0.5)")]
    Unlearnable,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing upstream artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    CsvIo(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
