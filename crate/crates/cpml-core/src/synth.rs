//! Seeded synthetic cohorts with controllable class separability: vital-sign
//! records drawn from class-conditional Gaussians and note corpora drawn
//! from class-conditional multinomials, plus the closed-form AUC target the
//! acceptance checks compare against.
//!
//! Each record is generated from its own RNG stream keyed by (seed, record
//! index), so output is independent of generation order.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::{Label, NoteRecord, VitalRecord};
use crate::error::{Error, Result};
use crate::text::DEFAULT_STOP_WORDS;

/// Physiologic range every generated sample must fall in.
pub const PHYSIOLOGIC_MIN: f64 = 0.0;
pub const PHYSIOLOGIC_MAX: f64 = 300.0;

/// Draws outside the physiologic range are rejected and redrawn (no point
/// mass at the bounds); a config whose mass lies almost entirely outside the
/// range exhausts this budget and errors.
const TRUNCATION_RETRY_CAP: usize = 10_000;

/// Class-conditional Gaussian for one vital sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalParams {
    pub negative_mean: f64,
    pub negative_std: f64,
    pub positive_mean: f64,
    pub positive_std: f64,
    pub samples_per_record: usize,
}

impl SignalParams {
    fn mean_std(&self, label: Label) -> (f64, f64) {
        match label {
            Label::Negative => (self.negative_mean, self.negative_std),
            Label::Positive => (self.positive_mean, self.positive_std),
        }
    }

    fn is_shifted(&self) -> bool {
        self.positive_mean != self.negative_mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitalsSynthConfig {
    pub n_records: usize,
    pub prevalence: f64,
    pub heart_rate: SignalParams,
    pub resp_rate: SignalParams,
    pub spo2: SignalParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotesSynthConfig {
    pub n_records: usize,
    pub prevalence: f64,
    pub vocabulary_size: usize,
    pub n_marker_tokens: usize,
    pub marker_boost: f64,
    pub stop_word_rate: f64,
    pub note_length_min: usize,
    pub note_length_max: usize,
}

/// The number of positives is fixed at round(prevalence × n), not drawn, so
/// class counts are exact; the first `n_pos` records are the positives.
fn positive_count(n_records: usize, prevalence: f64) -> Result<usize> {
    if n_records < 2 {
        return Err(Error::Config(format!(
            "n_records must be at least 2, got {n_records}"
        )));
    }
    if !(prevalence > 0.0 && prevalence < 1.0) {
        return Err(Error::Config(format!(
            "prevalence must lie strictly between 0 and 1, got {prevalence}"
        )));
    }
    let n_pos = (prevalence * n_records as f64).round() as usize;
    if n_pos == 0 || n_pos == n_records {
        return Err(Error::Config(format!(
            "prevalence {prevalence} rounds to a single-class cohort at {n_records} records"
        )));
    }
    Ok(n_pos)
}

fn validate_signal(name: &str, params: &SignalParams) -> Result<()> {
    for (field, value) in [
        ("negative_mean", params.negative_mean),
        ("negative_std", params.negative_std),
        ("positive_mean", params.positive_mean),
        ("positive_std", params.positive_std),
    ] {
        if !value.is_finite() {
            return Err(Error::Config(format!("{name}.{field} must be finite")));
        }
    }
    if params.negative_std <= 0.0 || params.positive_std <= 0.0 {
        return Err(Error::Config(format!("{name} stds must be positive")));
    }
    if params.samples_per_record == 0 {
        return Err(Error::Config(format!(
            "{name}.samples_per_record must be at least 1"
        )));
    }
    Ok(())
}

fn record_rng(seed: u64, record_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record_index as u64 + 1);
    rng
}

fn truncated_normal(rng: &mut ChaCha8Rng, dist: &Normal<f64>) -> Result<f64> {
    for _ in 0..TRUNCATION_RETRY_CAP {
        let v = dist.sample(rng);
        if (PHYSIOLOGIC_MIN..=PHYSIOLOGIC_MAX).contains(&v) {
            return Ok(v);
        }
    }
    Err(Error::Config(format!(
        "no draw fell inside [{PHYSIOLOGIC_MIN}, {PHYSIOLOGIC_MAX}] after \
         {TRUNCATION_RETRY_CAP} attempts; the configured mean/std put nearly \
         all mass outside the physiologic range"
    )))
}

fn draw_series(rng: &mut ChaCha8Rng, params: &SignalParams, label: Label) -> Result<Vec<f64>> {
    let (mean, std) = params.mean_std(label);
    let dist = Normal::new(mean, std).map_err(|e| Error::Config(e.to_string()))?;
    (0..params.samples_per_record)
        .map(|_| truncated_normal(rng, &dist))
        .collect()
}

/// Generates a labeled cohort of vital-sign records, deterministic in
/// (config, seed). Ids are `v000000`, `v000001`, … in order.
pub fn generate_vitals_cohort(config: &VitalsSynthConfig, seed: u64) -> Result<Vec<VitalRecord>> {
    let n_pos = positive_count(config.n_records, config.prevalence)?;
    for (name, params) in [
        ("heart_rate", &config.heart_rate),
        ("resp_rate", &config.resp_rate),
        ("spo2", &config.spo2),
    ] {
        validate_signal(name, params)?;
    }

    let mut records = Vec::with_capacity(config.n_records);
    for i in 0..config.n_records {
        let label = if i < n_pos {
            Label::Positive
        } else {
            Label::Negative
        };
        let mut rng = record_rng(seed, i);
        let heart_rate = draw_series(&mut rng, &config.heart_rate, label)?;
        let resp_rate = draw_series(&mut rng, &config.resp_rate, label)?;
        let spo2 = draw_series(&mut rng, &config.spo2, label)?;
        records.push(VitalRecord {
            record_id: format!("v{i:06}"),
            label,
            heart_rate,
            spo2,
            resp_rate,
        });
    }
    Ok(records)
}

/// Deterministic synthetic token; lowercase alphabetic so the tokenizer
/// keeps it, `tok`-prefixed so it never collides with a stop word.
fn token_name(index: usize) -> String {
    let mut index = index;
    let mut suffix = Vec::new();
    loop {
        suffix.push(b'a' + (index % 26) as u8);
        index /= 26;
        if index == 0 {
            break;
        }
        index -= 1;
    }
    suffix.reverse();
    format!("tok{}", std::str::from_utf8(&suffix).unwrap())
}

/// Generates a labeled note corpus, deterministic in (config, seed). Content
/// tokens follow a 1/(rank+1) weight profile; the positive class up-weights
/// the first `n_marker_tokens` ranks by (1 + marker_boost). Stop words are
/// interleaved at `stop_word_rate` and every twelfth separator is a newline,
/// so downstream cleanup and filtering both do real work. Ids are
/// `n000000`, `n000001`, …
pub fn generate_notes_corpus(config: &NotesSynthConfig, seed: u64) -> Result<Vec<NoteRecord>> {
    let n_pos = positive_count(config.n_records, config.prevalence)?;
    if config.vocabulary_size == 0 {
        return Err(Error::Config("vocabulary_size must be at least 1".into()));
    }
    if config.n_marker_tokens > config.vocabulary_size {
        return Err(Error::Config(format!(
            "n_marker_tokens {} exceeds vocabulary_size {}",
            config.n_marker_tokens, config.vocabulary_size
        )));
    }
    if !config.marker_boost.is_finite() || config.marker_boost < 0.0 {
        return Err(Error::Config(format!(
            "marker_boost must be finite and non-negative, got {}",
            config.marker_boost
        )));
    }
    if !(0.0..1.0).contains(&config.stop_word_rate) {
        return Err(Error::Config(format!(
            "stop_word_rate must lie in [0, 1), got {}",
            config.stop_word_rate
        )));
    }
    if config.note_length_min == 0 || config.note_length_max < config.note_length_min {
        return Err(Error::Config(format!(
            "note lengths must satisfy 1 <= min <= max, got {}..{}",
            config.note_length_min, config.note_length_max
        )));
    }

    let negative_weights: Vec<f64> = (0..config.vocabulary_size)
        .map(|rank| 1.0 / (rank + 1) as f64)
        .collect();
    let mut positive_weights = negative_weights.clone();
    for w in positive_weights[..config.n_marker_tokens].iter_mut() {
        *w *= 1.0 + config.marker_boost;
    }
    let negative_dist =
        WeightedIndex::new(&negative_weights).map_err(|e| Error::Config(e.to_string()))?;
    let positive_dist =
        WeightedIndex::new(&positive_weights).map_err(|e| Error::Config(e.to_string()))?;

    let mut records = Vec::with_capacity(config.n_records);
    for i in 0..config.n_records {
        let label = if i < n_pos {
            Label::Positive
        } else {
            Label::Negative
        };
        let dist = match label {
            Label::Positive => &positive_dist,
            Label::Negative => &negative_dist,
        };
        let mut rng = record_rng(seed, i);
        let length = rng.gen_range(config.note_length_min..=config.note_length_max);
        let mut text = String::new();
        for k in 0..length {
            if k > 0 {
                text.push(if k % 12 == 0 { '\n' } else { ' ' });
            }
            if rng.gen_bool(config.stop_word_rate) {
                text.push_str(DEFAULT_STOP_WORDS[rng.gen_range(0..DEFAULT_STOP_WORDS.len())]);
            } else {
                text.push_str(&token_name(dist.sample(&mut rng)));
            }
        }
        records.push(NoteRecord {
            admission_id: format!("n{i:06}"),
            text: Some(text),
            label,
        });
    }
    Ok(records)
}

/// Error function to ≤ 1e-10 absolute error: for |x| ≤ 5 the positive-term
/// series (2x/√π)·e^(−x²)·Σ (2x²)ⁿ / (2n+1)!!, which has no cancellation;
/// beyond that erf saturates to ±1 within 2e-12.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x > 5.0 {
        return 1.0;
    }
    let two_x_sq = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    while term > sum * f64::EPSILON && n < 500 {
        n += 1;
        term *= two_x_sq / (2 * n + 1) as f64;
        sum += term;
    }
    std::f64::consts::FRAC_2_SQRT_PI * x * (-x * x).exp() * sum
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Best achievable AUC for the configured cohort when at most one signal's
/// class means differ: Φ(Δμ / √(σ₋² + σ₊²)) for a single per-sample draw of
/// the shifted signal (0.5 when nothing is shifted). With two or more
/// shifted signals no closed form is attempted.
pub fn analytic_auc_target(config: &VitalsSynthConfig) -> Result<f64> {
    for (name, params) in [
        ("heart_rate", &config.heart_rate),
        ("resp_rate", &config.resp_rate),
        ("spo2", &config.spo2),
    ] {
        validate_signal(name, params)?;
    }
    let shifted: Vec<&SignalParams> = [&config.heart_rate, &config.resp_rate, &config.spo2]
        .into_iter()
        .filter(|p| p.is_shifted())
        .collect();
    match shifted.as_slice() {
        [] => Ok(0.5),
        [params] => {
            let delta = params.positive_mean - params.negative_mean;
            let spread = (params.negative_std.powi(2) + params.positive_std.powi(2)).sqrt();
            Ok(normal_cdf(delta / spread))
        }
        _ => Err(Error::Config(
            "analytic AUC target is defined only when at most one signal's class means differ"
                .into(),
        )),
    }
}
