//! Subset scores (DR, SQ, AP, SD), their weighted composite and ranking.
//!
//! All ratios use dataset-level means, unweighted over utterances.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::metric::MetricKind;
use crate::stats::{self, Summary};
use crate::{Error, Result};

/// Processed means at or below this are rejected as ratio denominators.
pub const EPSILON: f64 = 1e-6;
/// Reference distortion dividing MCD in the SD score, dB.
pub const MCD_REFERENCE_DB: f64 = 5.0;

pub const SQ_KINDS: [MetricKind; 3] = [MetricKind::Pesq, MetricKind::SiSdr, MetricKind::Snr];
pub const AP_KINDS: [MetricKind; 2] = [MetricKind::T30, MetricKind::C50];

/// Metrics needed to score a configuration.
pub fn required_kinds(denoised: bool) -> Vec<MetricKind> {
    let mut kinds: Vec<MetricKind> = SQ_KINDS.iter().chain(&AP_KINDS).copied().collect();
    kinds.push(MetricKind::F0Std);
    if denoised {
        kinds.push(MetricKind::Mcd);
    }
    kinds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub hours: f64,
    pub count: usize,
    pub metrics: BTreeMap<MetricKind, Summary>,
}

impl AggregateMetrics {
    /// Aggregates built from bare means (std 0, count 0).
    pub fn from_means(hours: f64, means: impl IntoIterator<Item = (MetricKind, f64)>) -> Self {
        AggregateMetrics {
            hours,
            count: 0,
            metrics: means
                .into_iter()
                .map(|(k, mean)| {
                    (
                        k,
                        Summary {
                            mean,
                            std: 0.0,
                            count: 0,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, kind: MetricKind) -> Option<&Summary> {
        self.metrics.get(&kind)
    }

    pub fn mean(&self, kind: MetricKind) -> Result<f64> {
        self.metrics
            .get(&kind)
            .map(|s| s.mean)
            .ok_or(Error::MissingAggregate(kind))
    }
}

/// Unweighted mean and population std of each requested metric; requires
/// every utterance to carry every requested metric.
pub fn aggregate(snapshot: &CorpusSnapshot, kinds: &[MetricKind]) -> Result<AggregateMetrics> {
    if snapshot.is_empty() {
        return Err(Error::EmptySnapshot(snapshot.name.clone()));
    }
    let mut metrics = BTreeMap::new();
    for &kind in kinds {
        let values = snapshot.values(kind)?;
        let summary =
            stats::summarize(&values).ok_or(Error::EmptySnapshot(snapshot.name.clone()))?;
        metrics.insert(kind, summary);
    }
    Ok(AggregateMetrics {
        hours: snapshot.total_hours(),
        count: snapshot.len(),
        metrics,
    })
}

fn positive_mean(agg: &AggregateMetrics, kind: MetricKind) -> Result<f64> {
    let value = agg.mean(kind)?;
    if value > EPSILON {
        Ok(value)
    } else {
        Err(Error::NonPositiveMean {
            metric: kind,
            value,
        })
    }
}

/// `1 - hours_P / hours_R`.
pub fn score_dr(raw: &AggregateMetrics, processed: &AggregateMetrics) -> Result<f64> {
    if !(raw.hours > 0.0) {
        return Err(Error::ZeroRawHours);
    }
    Ok(1.0 - processed.hours / raw.hours)
}

/// `PESQ_R/PESQ_P + SI-SDR_R/SI-SDR_P + SNR_R/SNR_P`.
pub fn score_sq(raw: &AggregateMetrics, processed: &AggregateMetrics) -> Result<f64> {
    let mut total = 0.0;
    for kind in SQ_KINDS {
        let denom = positive_mean(processed, kind)?;
        total += raw.mean(kind)? / denom;
    }
    Ok(total)
}

/// `T30_P/T30_R + C50_R/C50_P`.
pub fn score_ap(raw: &AggregateMetrics, processed: &AggregateMetrics) -> Result<f64> {
    let t30_r = positive_mean(raw, MetricKind::T30)?;
    let c50_p = positive_mean(processed, MetricKind::C50)?;
    Ok(processed.mean(MetricKind::T30)? / t30_r + raw.mean(MetricKind::C50)? / c50_p)
}

/// `|1 - F0std_P/F0std_R|`, plus `MCD_P / mcd_reference_db` when denoised.
pub fn score_sd(
    raw: &AggregateMetrics,
    processed: &AggregateMetrics,
    denoised: bool,
    mcd_reference_db: f64,
) -> Result<f64> {
    let f0_r = positive_mean(raw, MetricKind::F0Std)?;
    let mut sd = (1.0 - processed.mean(MetricKind::F0Std)? / f0_r).abs();
    if denoised {
        if !(mcd_reference_db > 0.0) {
            return Err(Error::invalid("MCD reference must be positive"));
        }
        sd += processed.mean(MetricKind::Mcd)? / mcd_reference_db;
    }
    Ok(sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreWeights {
    pub dr: f64,
    pub sq: f64,
    pub ap: f64,
    pub sd: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            dr: 1.0,
            sq: 1.0,
            ap: 1.0,
            sd: 1.0,
        }
    }
}

impl ScoreWeights {
    pub fn new(dr: f64, sq: f64, ap: f64, sd: f64) -> Result<Self> {
        let w = ScoreWeights { dr, sq, ap, sd };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.dr, self.sq, self.ap, self.sd];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid("at least one weight must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetScores {
    pub dr: f64,
    pub sq: f64,
    pub ap: f64,
    pub sd: f64,
    pub weights: ScoreWeights,
    pub total: f64,
}

pub fn composite(dr: f64, sq: f64, ap: f64, sd: f64, weights: ScoreWeights) -> SubsetScores {
    let total = weights.dr * dr + weights.sq * sq + weights.ap * ap + weights.sd * sd;
    SubsetScores {
        dr,
        sq,
        ap,
        sd,
        weights,
        total,
    }
}

/// All four subset scores and the composite.
pub fn score(
    raw: &AggregateMetrics,
    processed: &AggregateMetrics,
    denoised: bool,
    weights: ScoreWeights,
    mcd_reference_db: f64,
) -> Result<SubsetScores> {
    weights.validate()?;
    Ok(composite(
        score_dr(raw, processed)?,
        score_sq(raw, processed)?,
        score_ap(raw, processed)?,
        score_sd(raw, processed, denoised, mcd_reference_db)?,
        weights,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub config: String,
    pub scores: SubsetScores,
}

fn rank_order(a: &Ranked, b: &Ranked) -> Ordering {
    a.scores
        .total
        .total_cmp(&b.scores.total)
        .then(a.scores.dr.total_cmp(&b.scores.dr))
        .then_with(|| a.config.cmp(&b.config))
}

/// Ascending total, then DR, then configuration name.
pub fn rank(mut entries: Vec<Ranked>) -> Vec<Ranked> {
    entries.sort_by(rank_order);
    entries
}
