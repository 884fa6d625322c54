//! Vital-sign featurization: five summary statistics per signal plus
//! stage-occupancy fractions against the GOLD-derived severity thresholds.

use crate::data::VitalRecord;
use crate::error::{Error, Result};

/// The three monitored signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    HeartRate,
    RespRate,
    Spo2,
}

/// Severity stage of one sample. Heart rate and SpO2 use the five-level
/// Normal..VerySevere scale; respiratory rate uses Low/Normal/High/Abnormal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Normal,
    Mild,
    Moderate,
    Severe,
    VerySevere,
    Low,
    High,
    Abnormal,
}

const HR_STAGES: [Stage; 5] = [
    Stage::Normal,
    Stage::Mild,
    Stage::Moderate,
    Stage::Severe,
    Stage::VerySevere,
];
const RR_STAGES: [Stage; 4] = [Stage::Low, Stage::Normal, Stage::High, Stage::Abnormal];
const SPO2_STAGES: [Stage; 5] = HR_STAGES;

impl SignalKind {
    /// The stage scale for this signal, in feature order.
    pub fn stages(self) -> &'static [Stage] {
        match self {
            SignalKind::HeartRate => &HR_STAGES,
            SignalKind::RespRate => &RR_STAGES,
            SignalKind::Spo2 => &SPO2_STAGES,
        }
    }
}

/// Assigns one sample to its severity stage. Boundary values go to the more
/// severe stage (HR 90 → Mild, RR 18 → High, SpO2 92 → Mild) so the stages
/// partition the real line.
pub fn stage_sample(kind: SignalKind, value: f64) -> Stage {
    match kind {
        SignalKind::HeartRate => match value {
            v if v < 90.0 => Stage::Normal,
            v if v < 100.0 => Stage::Mild,
            v if v < 110.0 => Stage::Moderate,
            v if v < 120.0 => Stage::Severe,
            _ => Stage::VerySevere,
        },
        SignalKind::RespRate => match value {
            v if v < 12.0 => Stage::Low,
            v if v < 18.0 => Stage::Normal,
            v if v < 20.0 => Stage::High,
            _ => Stage::Abnormal,
        },
        SignalKind::Spo2 => match value {
            v if v > 92.0 => Stage::Normal,
            v if v > 90.0 => Stage::Mild,
            v if v > 85.0 => Stage::Moderate,
            v if v > 80.0 => Stage::Severe,
            _ => Stage::VerySevere,
        },
    }
}

/// Five summary statistics of a sample series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

/// Max, min, mean, median and sample standard deviation (divisor n−1,
/// defined as 0 for a single sample). Median of an even-length series is the
/// mean of the two central order statistics.
pub fn summary_stats(series: &[f64]) -> Result<SummaryStats> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = series.len();
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let min = sorted[0];
    let max = sorted[n - 1];
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let std = if n == 1 {
        0.0
    } else {
        let ss = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(SummaryStats {
        max,
        min,
        mean,
        median,
        std,
    })
}

/// Fraction of samples falling in each stage, aligned with
/// [`SignalKind::stages`]. Sums to 1 for any non-empty series.
pub fn bucket_fractions(kind: SignalKind, series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let stages = kind.stages();
    let mut counts = vec![0usize; stages.len()];
    for &v in series {
        let stage = stage_sample(kind, v);
        let idx = stages.iter().position(|&s| s == stage).expect("stage in scale");
        counts[idx] += 1;
    }
    let n = series.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Number of features produced per record.
pub const N_VITAL_FEATURES: usize = 29;

/// Column names of the vital feature vector, in output order.
pub const VITAL_FEATURE_NAMES: [&str; N_VITAL_FEATURES] = [
    "hr_max",
    "hr_min",
    "hr_mean",
    "hr_median",
    "hr_std",
    "rr_max",
    "rr_min",
    "rr_mean",
    "rr_median",
    "rr_std",
    "spo2_max",
    "spo2_min",
    "spo2_mean",
    "spo2_median",
    "spo2_std",
    "hr_frac_normal",
    "hr_frac_mild",
    "hr_frac_moderate",
    "hr_frac_severe",
    "hr_frac_very_severe",
    "rr_frac_low",
    "rr_frac_normal",
    "rr_frac_high",
    "rr_frac_abnormal",
    "spo2_frac_normal",
    "spo2_frac_mild",
    "spo2_frac_moderate",
    "spo2_frac_severe",
    "spo2_frac_very_severe",
];

fn push_stats(out: &mut Vec<f64>, stats: SummaryStats) {
    out.extend([stats.max, stats.min, stats.mean, stats.median, stats.std]);
}

/// The 29-feature vector of one record: HR/RR/SpO2 statistics followed by
/// HR/RR/SpO2 stage fractions.
pub fn featurize_record(record: &VitalRecord) -> Result<Vec<f64>> {
    let series = [
        (SignalKind::HeartRate, "HR", &record.heart_rate),
        (SignalKind::RespRate, "RR", &record.resp_rate),
        (SignalKind::Spo2, "SPO2", &record.spo2),
    ];
    for (_, name, samples) in &series {
        if samples.is_empty() {
            return Err(Error::EmptySeries {
                record_id: record.record_id.clone(),
                signal: name.to_string(),
            });
        }
    }
    let mut out = Vec::with_capacity(N_VITAL_FEATURES);
    for (_, _, samples) in &series {
        push_stats(&mut out, summary_stats(samples)?);
    }
    for (kind, _, samples) in &series {
        out.extend(bucket_fractions(*kind, samples)?);
    }
    debug_assert_eq!(out.len(), N_VITAL_FEATURES);
    Ok(out)
}
