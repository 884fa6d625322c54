//! The three binary classifiers behind one contract: train on a score
//! matrix with ±1 labels, produce a real-valued margin per row, binarize at
//! a threshold.

pub mod adaboost;
pub mod qda;
pub mod svm;

pub use adaboost::{
    train_adaboost, train_adaboost_traced, AdaBoostModel, BoostRound, BoostTrace, RoundTrace,
    Stump,
};
pub use qda::{train_qda, ClassGaussian, QdaModel};
pub use svm::{default_gamma, train_svm, SvmModel, SvmParams};

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version stamp written into every model file.
pub const MODEL_SCHEMA: u32 = 1;

/// Any trained classifier, tagged for serialization and dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum ClassifierModel {
    Svm(SvmModel),
    Qda(QdaModel),
    Adaboost(AdaBoostModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: u32,
    #[serde(flatten)]
    model: ClassifierModel,
}

impl ClassifierModel {
    pub fn model_type(&self) -> &'static str {
        match self {
            ClassifierModel::Svm(_) => "svm",
            ClassifierModel::Qda(_) => "qda",
            ClassifierModel::Adaboost(_) => "adaboost",
        }
    }

    pub fn score(&self, x: ArrayView1<f64>) -> Result<f64> {
        match self {
            ClassifierModel::Svm(m) => m.score(x),
            ClassifierModel::Qda(m) => m.score(x),
            ClassifierModel::Adaboost(m) => m.score(x),
        }
    }

    pub fn score_rows(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        x.rows().into_iter().map(|row| self.score(row)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(
            file,
            &ModelFile {
                schema: MODEL_SCHEMA,
                model: self.clone(),
            },
        )?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ClassifierModel> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let parsed: ModelFile = serde_json::from_reader(file)?;
        if parsed.schema != MODEL_SCHEMA {
            return Err(Error::Config(format!(
                "{}: model schema {} unsupported (expected {})",
                path.display(),
                parsed.schema,
                MODEL_SCHEMA
            )));
        }
        Ok(parsed.model)
    }
}

/// 1 iff score ≥ threshold; a score exactly at the threshold classifies
/// positive.
pub fn predict(score: f64, threshold: f64) -> u8 {
    u8::from(score >= threshold)
}
