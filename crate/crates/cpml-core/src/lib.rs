//! COPD prediction from routine clinical data: bag-of-words features from
//! notes and stage-fraction summaries from vital signs, reduced by partial
//! least squares and classified by SVM, QDA or AdaBoost, with ROC/AUC
//! evaluation — all orchestrated as a deterministic, seed-driven pipeline
//! over CSV/JSON artifacts.

pub mod classifiers;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod partition;
pub mod pipeline;
pub mod pls;
pub mod synth;
pub mod text;
pub mod vitals;

pub use error::{Error, Result};
