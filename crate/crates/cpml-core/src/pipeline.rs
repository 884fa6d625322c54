//! End-to-end orchestration: one JSON config drives
//! synth → split → featurize → train → eval. Every stage is callable
//! standalone on the previous stage's files and produces exactly what the
//! monolithic run would, so composition and one-shot runs are
//! interchangeable.
//!
//! All randomness flows from the configured seeds; nothing reads the clock
//! or ambient entropy, so a rerun with the same config is byte-identical.
//!
//! Layout under `output_dir`:
//!
//! ```text
//! effective_config.json        the resolved config the run used
//! INCOMPLETE                   present only while a run is in flight/aborted
//! summary.json                 seed-averaged metrics per model
//! seed_<N>/
//!   stamp.json                 {seed, config_digest} artifact guard
//!   data.csv                   synthesized cohort (absent with external data)
//!   split_manifest.csv         id,assignment after negative downsampling
//!   features.csv               vitals runs: dense feature matrix
//!   vocabulary.txt + dtm.csv   notes runs: fitted vocabulary + term counts
//!   pls_model.json             fitted reduction (scaling.json when enabled)
//!   model_<kind>.json          one per trained classifier
//!   roc_<kind>.csv             threshold,fpr,tpr sweep per classifier
//!   summary.json               per-seed reports keyed by model type
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{train_adaboost, train_qda, train_svm, ClassifierModel, SvmParams};
use crate::data::{self, Label};
use crate::error::{Error, Result};
use crate::eval::{accuracy, roc_curve, write_roc_csv, EvalReport, SeedSummary};
use crate::features::FeatureMatrix;
use crate::partition::{balance_training, read_manifest, split, write_manifest};
use crate::pls::{fit_pls, transform, PlsModel};
use crate::synth::{
    generate_notes_corpus, generate_vitals_cohort, NotesSynthConfig, VitalsSynthConfig,
};
use crate::text::{
    build_vocabulary, clean_text, tokenize, vectorize, DocumentTermMatrix, StopWordList,
    Vocabulary,
};

/// Marker file present while a run is in flight; a leftover marker means the
/// directory holds partial output.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Salt decorrelating the balancing draw from the split draw per seed.
const BALANCE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Notes,
    Vitals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierChoice {
    Svm,
    Qda,
    Adaboost,
    All,
}

impl ClassifierChoice {
    /// Concrete classifier names this choice trains, in training order.
    pub fn selected(self) -> &'static [&'static str] {
        match self {
            ClassifierChoice::Svm => &["svm"],
            ClassifierChoice::Qda => &["qda"],
            ClassifierChoice::Adaboost => &["adaboost"],
            ClassifierChoice::All => &["svm", "qda", "adaboost"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaboostSettings {
    pub n_rounds: usize,
}

impl Default for AdaboostSettings {
    fn default() -> AdaboostSettings {
        AdaboostSettings { n_rounds: 50 }
    }
}

/// The single JSON document driving a run. Unknown keys are rejected.
/// `train_fraction: None` resolves per model kind (0.5 notes, 0.7 vitals);
/// exactly one data source must be set: `data_path` or the synth block
/// matching `model_kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model_kind: ModelKind,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    #[serde(default)]
    pub synth_vitals: Option<VitalsSynthConfig>,
    #[serde(default)]
    pub synth_notes: Option<NotesSynthConfig>,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    #[serde(default = "default_n_components")]
    pub n_components: usize,
    #[serde(default)]
    pub scale_features: bool,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierChoice,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub adaboost: AdaboostSettings,
    #[serde(default)]
    pub accuracy_threshold: f64,
    #[serde(default)]
    pub stop_words_extra: Vec<String>,
}

fn default_max_features() -> usize {
    3000
}

fn default_n_components() -> usize {
    15
}

fn default_classifier() -> ClassifierChoice {
    ClassifierChoice::All
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fills kind-dependent defaults and validates. Stages always operate on
    /// (and digest) the resolved form, so a partially-defaulted config and
    /// its resolution are interchangeable.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut resolved = self.clone();
        if resolved.train_fraction.is_none() {
            resolved.train_fraction = Some(match resolved.model_kind {
                ModelKind::Notes => 0.5,
                ModelKind::Vitals => 0.7,
            });
        }
        resolved.validate()?;
        Ok(resolved)
    }

    /// SHA-256 of the resolved config's canonical JSON; stamped into every
    /// summary so artifacts can be traced to the exact configuration.
    pub fn digest(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)?;
        Ok(format!("{:x}", Sha256::digest(canonical.as_bytes())))
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::Config(
                "seeds contain duplicates; each seed owns one output directory".into(),
            ));
        }
        if let Some(fraction) = self.train_fraction {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::Config(format!(
                    "train_fraction must lie strictly between 0 and 1, got {fraction}"
                )));
            }
        }
        if self.max_features == 0 {
            return Err(Error::Config("max_features must be at least 1".into()));
        }
        if self.n_components == 0 {
            return Err(Error::Config("n_components must be at least 1".into()));
        }
        if !self.accuracy_threshold.is_finite() {
            return Err(Error::Config("accuracy_threshold must be finite".into()));
        }
        if self.svm.c <= 0.0 || !self.svm.c.is_finite() {
            return Err(Error::Config(format!(
                "svm.c must be positive, got {}",
                self.svm.c
            )));
        }
        if self.svm.tol <= 0.0 || !self.svm.tol.is_finite() {
            return Err(Error::Config(format!(
                "svm.tol must be positive, got {}",
                self.svm.tol
            )));
        }
        if let Some(gamma) = self.svm.gamma {
            if gamma <= 0.0 || !gamma.is_finite() {
                return Err(Error::Config(format!(
                    "svm.gamma must be positive, got {gamma}"
                )));
            }
        }
        if self.adaboost.n_rounds == 0 {
            return Err(Error::Config("adaboost.n_rounds must be at least 1".into()));
        }

        let (matching_synth, foreign_synth, foreign_name) = match self.model_kind {
            ModelKind::Notes => (
                self.synth_notes.is_some(),
                self.synth_vitals.is_some(),
                "synth_vitals",
            ),
            ModelKind::Vitals => (
                self.synth_vitals.is_some(),
                self.synth_notes.is_some(),
                "synth_notes",
            ),
        };
        if foreign_synth {
            return Err(Error::Config(format!(
                "{foreign_name} does not apply to a {} run",
                match self.model_kind {
                    ModelKind::Notes => "notes",
                    ModelKind::Vitals => "vitals",
                }
            )));
        }
        match (self.data_path.is_some(), matching_synth) {
            (true, true) => Err(Error::Config(
                "set either data_path or a synth block, not both".into(),
            )),
            (false, false) => Err(Error::Config(
                "no data source: set data_path or a synth block".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// File locations inside one seed's output directory.
#[derive(Debug, Clone)]
pub struct SeedPaths {
    pub dir: PathBuf,
}

impl SeedPaths {
    pub fn new(output_dir: &Path, seed: u64) -> SeedPaths {
        SeedPaths {
            dir: output_dir.join(format!("seed_{seed}")),
        }
    }

    pub fn stamp(&self) -> PathBuf {
        self.dir.join("stamp.json")
    }

    pub fn data(&self) -> PathBuf {
        self.dir.join("data.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.dir.join("split_manifest.csv")
    }

    pub fn features(&self) -> PathBuf {
        self.dir.join("features.csv")
    }

    pub fn vocabulary(&self) -> PathBuf {
        self.dir.join("vocabulary.txt")
    }

    pub fn dtm(&self) -> PathBuf {
        self.dir.join("dtm.csv")
    }

    pub fn pls(&self) -> PathBuf {
        self.dir.join("pls_model.json")
    }

    pub fn scaling(&self) -> PathBuf {
        self.dir.join("scaling.json")
    }

    pub fn model(&self, name: &str) -> PathBuf {
        self.dir.join(format!("model_{name}.json"))
    }

    pub fn roc(&self, name: &str) -> PathBuf {
        self.dir.join(format!("roc_{name}.csv"))
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Stamp {
    seed: u64,
    config_digest: String,
}

/// Creates the seed directory and its stamp, or verifies an existing stamp.
/// Mixing artifacts produced under a different config or seed is refused.
fn ensure_stamp(paths: &SeedPaths, seed: u64, digest: &str) -> Result<()> {
    let want = Stamp {
        seed,
        config_digest: digest.to_string(),
    };
    if paths.stamp().exists() {
        let got: Stamp = serde_json::from_str(&std::fs::read_to_string(paths.stamp())?)?;
        if got != want {
            return Err(Error::Config(format!(
                "artifacts in {} were produced under a different config or seed",
                paths.dir.display()
            )));
        }
        return Ok(());
    }
    std::fs::create_dir_all(&paths.dir)?;
    let mut text = serde_json::to_string_pretty(&want)?;
    text.push('\n');
    std::fs::write(paths.stamp(), text)?;
    Ok(())
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path))
    }
}

/// Where this seed's input records live: the external file when one is
/// configured, otherwise the synthesized cohort inside the seed directory.
fn source_data_path(config: &PipelineConfig, paths: &SeedPaths) -> PathBuf {
    match &config.data_path {
        Some(path) => path.clone(),
        None => paths.data(),
    }
}

fn run_stage<T>(stage: &'static str, body: impl FnOnce() -> Result<T>) -> Result<T> {
    body().map_err(|e| e.in_stage(stage))
}

/// Generates and writes this seed's cohort. Requires a synth block; runs
/// with an external `data_path` have nothing to synthesize.
pub fn stage_synth(config: &PipelineConfig, seed: u64) -> Result<()> {
    run_stage("synth", || {
        let config = config.resolve()?;
        let digest = config.digest()?;
        let paths = SeedPaths::new(&config.output_dir, seed);
        match config.model_kind {
            ModelKind::Vitals => {
                let synth = config.synth_vitals.as_ref().ok_or_else(|| {
                    Error::Config("synth requires a synth_vitals block".into())
                })?;
                let records = generate_vitals_cohort(synth, seed)?;
                ensure_stamp(&paths, seed, &digest)?;
                data::write_vitals(&paths.data(), &records)?;
            }
            ModelKind::Notes => {
                let synth = config.synth_notes.as_ref().ok_or_else(|| {
                    Error::Config("synth requires a synth_notes block".into())
                })?;
                let records = generate_notes_corpus(synth, seed)?;
                ensure_stamp(&paths, seed, &digest)?;
                data::write_notes(&paths.data(), &records)?;
            }
        }
        Ok(())
    })
}

fn split_and_balance<R: data::Labeled>(
    records: &[R],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    let base = split(records, fraction, seed)?;
    let balanced = balance_training(&base, records, seed ^ BALANCE_SEED_SALT)?;
    Ok((balanced.train_ids, balanced.validation_ids))
}

/// Partitions this seed's records and downsamples training negatives,
/// writing the post-balance assignment manifest.
pub fn stage_split(config: &PipelineConfig, seed: u64) -> Result<()> {
    run_stage("split", || {
        let config = config.resolve()?;
        let digest = config.digest()?;
        let paths = SeedPaths::new(&config.output_dir, seed);
        ensure_stamp(&paths, seed, &digest)?;
        let data_path = require(source_data_path(&config, &paths))?;
        let fraction = config.train_fraction.expect("resolved config");
        let (train_ids, validation_ids) = match config.model_kind {
            ModelKind::Vitals => {
                split_and_balance(&data::load_vitals(&data_path)?, fraction, seed)?
            }
            ModelKind::Notes => {
                split_and_balance(&data::load_notes(&data_path)?, fraction, seed)?
            }
        };
        write_manifest(&paths.manifest(), &train_ids, &validation_ids)?;
        Ok(())
    })
}

/// Builds this seed's feature artifacts. Vitals records featurize
/// independently; notes fit the vocabulary on the balanced training
/// documents only (anything else leaks validation labels through the
/// supervised stages downstream), so the split manifest must exist first.
pub fn stage_featurize(config: &PipelineConfig, seed: u64) -> Result<()> {
    run_stage("featurize", || {
        let config = config.resolve()?;
        let digest = config.digest()?;
        let paths = SeedPaths::new(&config.output_dir, seed);
        ensure_stamp(&paths, seed, &digest)?;
        let data_path = require(source_data_path(&config, &paths))?;
        match config.model_kind {
            ModelKind::Vitals => {
                let records = data::load_vitals(&data_path)?;
                let features = FeatureMatrix::from_vital_records(&records)?;
                features.save_csv(&paths.features())?;
            }
            ModelKind::Notes => {
                let records = data::load_notes(&data_path)?;
                let (train_ids, _) = read_manifest(&require(paths.manifest())?)?;
                let train_set: HashSet<&str> = train_ids.iter().map(String::as_str).collect();
                let corpus: Vec<Vec<String>> = records
                    .iter()
                    .map(|r| tokenize(&clean_text(r.text.as_deref())))
                    .collect();
                let train_corpus: Vec<Vec<String>> = records
                    .iter()
                    .zip(&corpus)
                    .filter(|(r, _)| train_set.contains(r.admission_id.as_str()))
                    .map(|(_, tokens)| tokens.clone())
                    .collect();
                let mut stop_words = StopWordList::default_english();
                stop_words.extend(config.stop_words_extra.iter().map(String::as_str));
                let vocabulary =
                    build_vocabulary(&train_corpus, &stop_words, config.max_features)?;
                vocabulary.save(&paths.vocabulary())?;
                let doc_ids: Vec<String> =
                    records.iter().map(|r| r.admission_id.clone()).collect();
                let dtm = vectorize(&corpus, &vocabulary, &doc_ids);
                dtm.save_triplets(&paths.dtm())?;
            }
        }
        Ok(())
    })
}

/// Per-feature standardization fitted on the balanced training set.
/// Constant features pass through centered (unit divisor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaling {
    pub fn fit(x: &Array2<f64>) -> Scaling {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n;
            let var = if x.nrows() > 1 {
                col.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std = var.sqrt();
            means.push(mean);
            stds.push(if std > 0.0 { std } else { 1.0 });
        }
        Scaling { means, stds }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                actual: x.ncols(),
            });
        }
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.means[j]) / self.stds[j]);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scaling> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Loads the seed's full feature matrix (all records, labels joined from
/// the data file), in data-file row order.
fn load_features(config: &PipelineConfig, paths: &SeedPaths) -> Result<FeatureMatrix> {
    let data_path = require(source_data_path(config, paths))?;
    match config.model_kind {
        ModelKind::Vitals => {
            let records = data::load_vitals(&data_path)?;
            let labels: BTreeMap<String, Label> = records
                .iter()
                .map(|r| (r.record_id.clone(), r.label))
                .collect();
            FeatureMatrix::load_csv(&require(paths.features())?, &labels)
        }
        ModelKind::Notes => {
            let records = data::load_notes(&data_path)?;
            let vocabulary = Vocabulary::load(&require(paths.vocabulary())?)?;
            let doc_ids: Vec<String> = records.iter().map(|r| r.admission_id.clone()).collect();
            let dtm = DocumentTermMatrix::load_triplets(&require(paths.dtm())?, doc_ids, vocabulary)?;
            let labels: Vec<Label> = records.iter().map(|r| r.label).collect();
            FeatureMatrix::from_dtm(&dtm, &labels)
        }
    }
}

/// Fits scaling (when enabled) and PLS on the balanced training rows, then
/// trains every selected classifier on the reduced scores. The component
/// count is capped at the training set's admissible maximum, min(rows−1,
/// features).
pub fn stage_train(config: &PipelineConfig, seed: u64) -> Result<()> {
    run_stage("train", || {
        let config = config.resolve()?;
        let digest = config.digest()?;
        let paths = SeedPaths::new(&config.output_dir, seed);
        ensure_stamp(&paths, seed, &digest)?;
        let features = load_features(&config, &paths)?;
        let (train_ids, _) = read_manifest(&require(paths.manifest())?)?;
        let train = features.subset_by_ids(&train_ids)?;

        let mut x = train.values.clone();
        if config.scale_features {
            let scaling = Scaling::fit(&x);
            scaling.save(&paths.scaling())?;
            x = scaling.apply(&x)?;
        }
        let y = train.signed_labels();
        let cap = x.nrows().saturating_sub(1).min(x.ncols()).max(1);
        let (pls, scores) = fit_pls(&x, &y, config.n_components.min(cap))?;
        pls.save(&paths.pls())?;

        for &name in config.classifier.selected() {
            let model = match name {
                "svm" => ClassifierModel::Svm(train_svm(&scores, &y, &config.svm)?),
                "qda" => ClassifierModel::Qda(train_qda(&scores, &y)?),
                "adaboost" => ClassifierModel::Adaboost(train_adaboost(
                    &scores,
                    &y,
                    config.adaboost.n_rounds,
                )?),
                other => unreachable!("unknown classifier {other}"),
            };
            model.save(&paths.model(name))?;
        }
        Ok(())
    })
}

/// Scores the validation rows through the saved scaling/PLS/classifier
/// artifacts and writes one ROC file per model plus the per-seed summary.
pub fn stage_eval(config: &PipelineConfig, seed: u64) -> Result<SeedSummary> {
    run_stage("eval", || {
        let config = config.resolve()?;
        let digest = config.digest()?;
        let paths = SeedPaths::new(&config.output_dir, seed);
        ensure_stamp(&paths, seed, &digest)?;
        let features = load_features(&config, &paths)?;
        let (_, validation_ids) = read_manifest(&require(paths.manifest())?)?;
        let validation = features.subset_by_ids(&validation_ids)?;

        let mut x = validation.values.clone();
        if config.scale_features {
            let scaling = Scaling::load(&require(paths.scaling())?)?;
            x = scaling.apply(&x)?;
        }
        let pls = PlsModel::load(&require(paths.pls())?)?;
        let reduced = transform(&pls, &x)?;
        let labels: Vec<u8> = validation.labels.iter().map(|l| l.as_u8()).collect();
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        let n_neg = labels.len() - n_pos;

        let mut reports = BTreeMap::new();
        for &name in config.classifier.selected() {
            let model = ClassifierModel::load(&require(paths.model(name))?)?;
            let scores = model.score_rows(&reduced)?;
            let curve = roc_curve(&scores, &labels)?;
            write_roc_csv(&paths.roc(name), &curve)?;
            reports.insert(
                name.to_string(),
                EvalReport {
                    model_type: name.to_string(),
                    auc: curve.auc(),
                    accuracy: accuracy(&scores, &labels, config.accuracy_threshold)?,
                    n_pos,
                    n_neg,
                    seed,
                    config_digest: digest.clone(),
                },
            );
        }
        let summary = SeedSummary {
            seed,
            config_digest: digest,
            reports,
        };
        summary.save(&paths.summary())?;
        Ok(summary)
    })
}

/// Seed-averaged metrics across the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub mean_auc: BTreeMap<String, f64>,
    pub mean_accuracy: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunSummary> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs every stage for every configured seed, then writes the seed-averaged
/// summary. The output directory carries an `INCOMPLETE` marker from first
/// write until the run finishes, so aborted runs are recognizable.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary> {
    let config = config.resolve()?;
    let digest = config.digest()?;
    std::fs::create_dir_all(&config.output_dir)?;
    let marker = config.output_dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, "run in flight or aborted; summary.json is not final\n")?;
    let mut effective = serde_json::to_string_pretty(&config)?;
    effective.push('\n');
    std::fs::write(config.output_dir.join("effective_config.json"), effective)?;

    let mut summaries = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        if config.data_path.is_none() {
            stage_synth(&config, seed)?;
        }
        stage_split(&config, seed)?;
        stage_featurize(&config, seed)?;
        stage_train(&config, seed)?;
        summaries.push(stage_eval(&config, seed)?);
    }

    let n = summaries.len() as f64;
    let mut mean_auc = BTreeMap::new();
    let mut mean_accuracy = BTreeMap::new();
    for &name in config.classifier.selected() {
        mean_auc.insert(
            name.to_string(),
            summaries.iter().map(|s| s.reports[name].auc).sum::<f64>() / n,
        );
        mean_accuracy.insert(
            name.to_string(),
            summaries.iter().map(|s| s.reports[name].accuracy).sum::<f64>() / n,
        );
    }
    let run = RunSummary {
        config_digest: digest,
        seeds: config.seeds.clone(),
        mean_auc,
        mean_accuracy,
    };
    run.save(&config.output_dir.join("summary.json"))?;
    std::fs::remove_file(&marker)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SignalParams;
    use ndarray::array;

    fn shifted_signal(neg: f64, pos: f64, std: f64, samples: usize) -> SignalParams {
        SignalParams {
            negative_mean: neg,
            negative_std: std,
            positive_mean: pos,
            positive_std: std,
            samples_per_record: samples,
        }
    }

    fn vitals_config(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            model_kind: ModelKind::Vitals,
            output_dir: dir.to_path_buf(),
            seeds: vec![1, 2],
            data_path: None,
            synth_vitals: Some(VitalsSynthConfig {
                n_records: 80,
                prevalence: 0.3,
                heart_rate: shifted_signal(80.0, 100.0, 10.0, 4),
                resp_rate: shifted_signal(16.0, 16.0, 3.0, 4),
                spo2: shifted_signal(95.0, 95.0, 2.0, 4),
            }),
            synth_notes: None,
            train_fraction: None,
            max_features: 3000,
            n_components: 15,
            scale_features: false,
            classifier: ClassifierChoice::All,
            svm: SvmParams::default(),
            adaboost: AdaboostSettings { n_rounds: 10 },
            accuracy_threshold: 0.0,
            stop_words_extra: Vec::new(),
        }
    }

    fn notes_config(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            model_kind: ModelKind::Notes,
            output_dir: dir.to_path_buf(),
            seeds: vec![3],
            data_path: None,
            synth_vitals: None,
            synth_notes: Some(NotesSynthConfig {
                n_records: 120,
                prevalence: 0.4,
                vocabulary_size: 80,
                n_marker_tokens: 5,
                marker_boost: 8.0,
                stop_word_rate: 0.2,
                note_length_min: 30,
                note_length_max: 60,
            }),
            train_fraction: None,
            max_features: 60,
            n_components: 8,
            scale_features: false,
            classifier: ClassifierChoice::Svm,
            svm: SvmParams::default(),
            adaboost: AdaboostSettings::default(),
            accuracy_threshold: 0.0,
            stop_words_extra: Vec::new(),
        }
    }

    #[test]
    fn minimal_json_fills_documented_defaults() {
        let parsed: PipelineConfig = serde_json::from_str(
            r#"{
                "model_kind": "vitals",
                "output_dir": "out",
                "seeds": [7],
                "data_path": "cohort.csv"
            }"#,
        )
        .unwrap();
        assert_eq!(parsed.max_features, 3000);
        assert_eq!(parsed.n_components, 15);
        assert_eq!(parsed.classifier, ClassifierChoice::All);
        assert_eq!(parsed.adaboost.n_rounds, 50);
        assert_eq!(parsed.svm, SvmParams::default());
        assert_eq!(parsed.accuracy_threshold, 0.0);
        assert!(!parsed.scale_features);

        let resolved = parsed.resolve().unwrap();
        assert_eq!(resolved.train_fraction, Some(0.7));

        let mut notes = parsed;
        notes.model_kind = ModelKind::Notes;
        assert_eq!(notes.resolve().unwrap().train_fraction, Some(0.5));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<PipelineConfig>(
            r#"{"model_kind": "vitals", "output_dir": "out", "seeds": [1], "max_featuress": 10}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("max_featuress"), "{err}");
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let base = vitals_config(dir.path());

        let mut config = base.clone();
        config.seeds.clear();
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.seeds = vec![1, 1];
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.train_fraction = Some(1.0);
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.n_components = 0;
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.data_path = Some("also.csv".into());
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.synth_vitals = None;
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.synth_notes = notes_config(dir.path()).synth_notes;
        assert!(config.resolve().is_err());

        let mut config = base.clone();
        config.svm.c = 0.0;
        assert!(config.resolve().is_err());

        let mut config = base;
        config.adaboost.n_rounds = 0;
        assert!(config.resolve().is_err());
    }

    #[test]
    fn digest_tracks_the_resolved_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = vitals_config(dir.path()).resolve().unwrap();
        let digest = config.digest().unwrap();
        assert_eq!(digest.len(), 64);
        assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
        assert_eq!(digest, config.digest().unwrap());

        let mut other = config.clone();
        other.n_components = 14;
        assert_ne!(digest, other.digest().unwrap());
    }

    #[test]
    fn scaling_standardizes_and_round_trips() {
        let x = array![[1.0, 5.0, 2.0], [3.0, 5.0, 4.0], [5.0, 5.0, 9.0]];
        let scaling = Scaling::fit(&x);
        assert_eq!(scaling.means[0], 3.0);
        assert_eq!(scaling.stds[1], 1.0, "constant column gets unit divisor");
        let scaled = scaling.apply(&x).unwrap();
        for j in 0..3 {
            let col = scaled.column(j);
            assert!(col.sum().abs() < 1e-12);
        }
        assert_eq!(scaled.column(1).iter().filter(|&&v| v == 0.0).count(), 3);

        let f = tempfile::NamedTempFile::new().unwrap();
        scaling.save(f.path()).unwrap();
        assert_eq!(Scaling::load(f.path()).unwrap(), scaling);

        let narrow = array![[1.0, 2.0]];
        assert!(matches!(
            scaling.apply(&narrow),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vitals_run_emits_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let config = vitals_config(dir.path());
        let run = run_pipeline(&config).unwrap();

        assert!(dir.path().join("effective_config.json").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(!dir.path().join(INCOMPLETE_MARKER).exists());
        assert_eq!(run.seeds, vec![1, 2]);
        for name in ["svm", "qda", "adaboost"] {
            let auc = run.mean_auc[name];
            assert!((0.0..=1.0).contains(&auc), "{name} auc {auc}");
            assert!((0.0..=1.0).contains(&run.mean_accuracy[name]));
        }

        for seed in [1u64, 2] {
            let paths = SeedPaths::new(dir.path(), seed);
            for file in [
                paths.stamp(),
                paths.data(),
                paths.manifest(),
                paths.features(),
                paths.pls(),
                paths.summary(),
            ] {
                assert!(file.exists(), "missing {}", file.display());
            }
            assert!(!paths.vocabulary().exists());
            let summary = SeedSummary::load(&paths.summary()).unwrap();
            assert_eq!(summary.seed, seed);
            assert_eq!(summary.reports.len(), 3);
            for (key, report) in &summary.reports {
                assert_eq!(key, &report.model_type);
                assert_eq!(report.config_digest, run.config_digest);
                assert!(paths.model(key).exists());
                assert!(paths.roc(key).exists());
            }
        }
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = vitals_config(dir.path());
        run_pipeline(&config).unwrap();
        let first_root = std::fs::read(dir.path().join("summary.json")).unwrap();
        let first_seed =
            std::fs::read(SeedPaths::new(dir.path(), 1).summary()).unwrap();
        run_pipeline(&config).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("summary.json")).unwrap(),
            first_root
        );
        assert_eq!(
            std::fs::read(SeedPaths::new(dir.path(), 1).summary()).unwrap(),
            first_seed
        );
    }

    #[test]
    fn staged_execution_matches_the_monolithic_run() {
        let whole = tempfile::tempdir().unwrap();
        let staged = tempfile::tempdir().unwrap();
        let mut config = vitals_config(whole.path());
        config.seeds = vec![5];
        run_pipeline(&config).unwrap();

        let mut by_stage = config.clone();
        by_stage.output_dir = staged.path().to_path_buf();
        stage_synth(&by_stage, 5).unwrap();
        stage_split(&by_stage, 5).unwrap();
        stage_featurize(&by_stage, 5).unwrap();
        stage_train(&by_stage, 5).unwrap();
        stage_eval(&by_stage, 5).unwrap();

        let whole_paths = SeedPaths::new(whole.path(), 5);
        let staged_paths = SeedPaths::new(staged.path(), 5);
        for (a, b) in [
            (whole_paths.data(), staged_paths.data()),
            (whole_paths.manifest(), staged_paths.manifest()),
            (whole_paths.features(), staged_paths.features()),
            (whole_paths.pls(), staged_paths.pls()),
            (whole_paths.model("svm"), staged_paths.model("svm")),
            (whole_paths.roc("svm"), staged_paths.roc("svm")),
        ] {
            assert_eq!(
                std::fs::read(&a).unwrap(),
                std::fs::read(&b).unwrap(),
                "{} differs",
                a.display()
            );
        }
        // Summaries embed the config digest, which covers output_dir, so
        // compare their reports numerically instead of byte-wise.
        let a = SeedSummary::load(&whole_paths.summary()).unwrap();
        let b = SeedSummary::load(&staged_paths.summary()).unwrap();
        for (name, report) in &a.reports {
            assert_eq!(report.auc, b.reports[name].auc);
            assert_eq!(report.accuracy, b.reports[name].accuracy);
        }
    }

    #[test]
    fn notes_run_writes_text_artifacts_and_respects_classifier_choice() {
        let dir = tempfile::tempdir().unwrap();
        let config = notes_config(dir.path());
        let run = run_pipeline(&config).unwrap();
        assert_eq!(run.mean_auc.len(), 1);
        assert!(run.mean_auc.contains_key("svm"));

        let paths = SeedPaths::new(dir.path(), 3);
        assert!(paths.vocabulary().exists());
        assert!(paths.dtm().exists());
        assert!(!paths.features().exists());
        assert!(paths.model("svm").exists());
        assert!(!paths.model("qda").exists());
        let summary = SeedSummary::load(&paths.summary()).unwrap();
        assert_eq!(summary.reports.len(), 1);
    }

    #[test]
    fn external_data_path_skips_synthesis() {
        let dir = tempfile::tempdir().unwrap();
        let cohort = dir.path().join("cohort.csv");
        let mut config = vitals_config(&dir.path().join("out"));
        let records =
            generate_vitals_cohort(config.synth_vitals.as_ref().unwrap(), 99).unwrap();
        data::write_vitals(&cohort, &records).unwrap();
        config.synth_vitals = None;
        config.data_path = Some(cohort);
        config.seeds = vec![4];
        let run = run_pipeline(&config).unwrap();
        assert!((0.0..=1.0).contains(&run.mean_auc["svm"]));
        assert!(!SeedPaths::new(&config.output_dir, 4).data().exists());
    }

    #[test]
    fn missing_upstream_artifacts_name_stage_and_file() {
        let dir = tempfile::tempdir().unwrap();
        let config = vitals_config(dir.path());
        let err = stage_train(&config, 1).unwrap_err();
        match err {
            Error::Stage { stage, source } => {
                assert_eq!(stage, "train");
                assert!(matches!(*source, Error::MissingArtifact(_)), "{source}");
            }
            other => panic!("expected stage error, got {other}"),
        }
    }

    #[test]
    fn stamp_refuses_mixed_configs() {
        let dir = tempfile::tempdir().unwrap();
        let config = vitals_config(dir.path());
        stage_synth(&config, 1).unwrap();
        let mut other = config;
        other.n_components = 9;
        let err = stage_split(&other, 1).unwrap_err().to_string();
        assert!(err.contains("different config"), "{err}");
    }

    #[test]
    fn failed_run_leaves_the_incomplete_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = vitals_config(dir.path());
        config.svm.max_iter = Some(0);
        assert!(run_pipeline(&config).is_err());
        assert!(dir.path().join(INCOMPLETE_MARKER).exists());
    }

    #[test]
    fn scaled_run_writes_and_uses_the_scaler() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = vitals_config(dir.path());
        config.scale_features = true;
        config.seeds = vec![1];
        run_pipeline(&config).unwrap();
        let paths = SeedPaths::new(dir.path(), 1);
        let scaling = Scaling::load(&paths.scaling()).unwrap();
        assert_eq!(scaling.means.len(), 29);
    }
}
