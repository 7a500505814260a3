//! Configuration grids, threshold filtering of processed snapshots, per-config
//! scoring and filter-sensitivity diagnostics.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::metric::MetricKind;
use crate::scoring::{self, AggregateMetrics, ScoreWeights, SubsetScores};
use crate::stats;
use crate::{Error, Result};

/// Enhancement label of the unprocessed variant.
pub const NO_ENHANCEMENT: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub enhancement: String,
    pub filter_metric: MetricKind,
    pub threshold: f64,
    pub vad_profile: String,
}

impl PipelineConfig {
    /// `enhancement+METRIC:threshold`, unique within a grid.
    pub fn name(&self) -> String {
        format!(
            "{}+{}:{}",
            self.enhancement, self.filter_metric, self.threshold
        )
    }

    pub fn denoised(&self) -> bool {
        self.enhancement != NO_ENHANCEMENT
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.filter_metric.valid_range();
        if !(self.threshold.is_finite() && self.threshold >= lo && self.threshold <= hi) {
            return Err(Error::invalid(format!(
                "threshold {} outside the {} range [{lo}, {hi}]",
                self.threshold, self.filter_metric
            )));
        }
        if self.enhancement.is_empty() {
            return Err(Error::invalid("enhancement label is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterGrid {
    pub metric: MetricKind,
    pub thresholds: Vec<f64>,
}

/// Cartesian product in the order enhancement, filter, threshold.
pub fn build_grid(
    enhancements: &[String],
    filters: &[FilterGrid],
    vad_profile: &str,
) -> Result<Vec<PipelineConfig>> {
    if enhancements.is_empty() || filters.is_empty() {
        return Err(Error::invalid(
            "grid needs at least one enhancement and one filter",
        ));
    }
    let mut seen = BTreeSet::new();
    for e in enhancements {
        if !seen.insert(e.as_str()) {
            return Err(Error::invalid(format!("duplicate enhancement `{e}`")));
        }
    }
    for f in filters {
        if f.thresholds.is_empty() {
            return Err(Error::invalid(format!("{}: no thresholds", f.metric)));
        }
        for (i, t) in f.thresholds.iter().enumerate() {
            if f.thresholds[..i].contains(t) {
                return Err(Error::invalid(format!(
                    "{}: duplicate threshold {t}",
                    f.metric
                )));
            }
        }
    }
    let mut grid = Vec::new();
    for e in enhancements {
        for f in filters {
            for &threshold in &f.thresholds {
                let cfg = PipelineConfig {
                    enhancement: e.clone(),
                    filter_metric: f.metric,
                    threshold,
                    vad_profile: vad_profile.to_string(),
                };
                cfg.validate()?;
                grid.push(cfg);
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub retained: CorpusSnapshot,
    pub eliminated: CorpusSnapshot,
    pub metric: MetricKind,
    pub threshold: f64,
}

impl FilterOutcome {
    /// Checks the partition against `input`: disjoint, complete, and split
    /// on the right side of the threshold.
    pub fn verify(&self, input: &CorpusSnapshot) -> Result<()> {
        let retained: BTreeSet<&str> = self.retained.ids().collect();
        let eliminated: BTreeSet<&str> = self.eliminated.ids().collect();
        let all: BTreeSet<&str> = input.ids().collect();
        if retained.intersection(&eliminated).next().is_some() {
            return Err(Error::invalid("retained and eliminated overlap"));
        }
        if retained
            .union(&eliminated)
            .copied()
            .collect::<BTreeSet<_>>()
            != all
        {
            return Err(Error::invalid("partition does not cover the input"));
        }
        let side = |s: &CorpusSnapshot, keep: bool| {
            s.utterances().iter().all(|u| {
                u.metric(self.metric)
                    .is_some_and(|v| (v >= self.threshold) == keep)
            })
        };
        if !side(&self.retained, true) || !side(&self.eliminated, false) {
            return Err(Error::invalid(
                "utterance on the wrong side of the threshold",
            ));
        }
        Ok(())
    }
}

/// Keeps utterances with `metric >= threshold`.
pub fn apply_filter(
    snapshot: &CorpusSnapshot,
    metric: MetricKind,
    threshold: f64,
) -> Result<FilterOutcome> {
    snapshot.require(metric)?;
    let keep = |u: &crate::Utterance| u.metric(metric).is_some_and(|v| v >= threshold);
    Ok(FilterOutcome {
        retained: snapshot.filtered(format!("{}/retained", snapshot.name), keep),
        eliminated: snapshot.filtered(format!("{}/eliminated", snapshot.name), |u| !keep(u)),
        metric,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub threshold: f64,
    pub retained_fraction: f64,
    /// `|r(t) - r(t + delta)| / r(t)`; `None` when nothing is retained at `t`.
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub metric: MetricKind,
    pub delta: f64,
    pub count: usize,
    pub median: f64,
    pub variance: f64,
    pub rows: Vec<SensitivityRow>,
}

pub fn filter_sensitivity(
    snapshot: &CorpusSnapshot,
    metric: MetricKind,
    thresholds: &[f64],
    delta: f64,
) -> Result<SensitivityReport> {
    let values = snapshot.values(metric)?;
    sensitivity_of_values(metric, &values, thresholds, delta)
}

/// [`filter_sensitivity`] over bare metric values.
pub fn sensitivity_of_values(
    metric: MetricKind,
    values: &[f64],
    thresholds: &[f64],
    delta: f64,
) -> Result<SensitivityReport> {
    if thresholds.len() < 2 {
        return Err(Error::invalid("sensitivity needs at least two thresholds"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("sensitivity delta must be positive"));
    }
    if values.is_empty() {
        return Err(Error::EmptySnapshot(format!("{metric} values")));
    }
    let n = values.len() as f64;
    let fraction = |t: f64| values.iter().filter(|v| **v >= t).count() as f64 / n;
    let rows = thresholds
        .iter()
        .map(|&t| {
            let r = fraction(t);
            SensitivityRow {
                threshold: t,
                retained_fraction: r,
                sensitivity: (r > 0.0).then(|| (r - fraction(t + delta)).abs() / r),
            }
        })
        .collect();
    Ok(SensitivityReport {
        metric,
        delta,
        count: values.len(),
        median: stats::median(values).unwrap_or(f64::NAN),
        variance: stats::population_variance(values).unwrap_or(f64::NAN),
        rows,
    })
}

/// Relative duration tolerance when matching raw and processed utterances.
pub const DURATION_TOLERANCE: f64 = 0.01;

/// Same id set and durations within 1%.
pub fn check_alignment(raw: &CorpusSnapshot, processed: &CorpusSnapshot) -> Result<()> {
    if raw.len() != processed.len() {
        return Err(Error::Misaligned(format!(
            "{} has {} utterances, {} has {}",
            raw.name,
            raw.len(),
            processed.name,
            processed.len()
        )));
    }
    for u in processed.utterances() {
        let r = raw
            .get(&u.id)
            .ok_or_else(|| Error::Misaligned(format!("`{}` not in {}", u.id, raw.name)))?;
        if (u.duration_s - r.duration_s).abs() > DURATION_TOLERANCE * r.duration_s {
            return Err(Error::Misaligned(format!(
                "`{}` lasts {} s raw and {} s processed",
                u.id, r.duration_s, u.duration_s
            )));
        }
    }
    Ok(())
}

/// Count, hours and metric summaries of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub count: usize,
    pub hours: f64,
    pub metrics: BTreeMap<MetricKind, stats::Summary>,
}

fn stage(name: &str, snapshot: &CorpusSnapshot, kinds: &[MetricKind]) -> Stage {
    let metrics = kinds
        .iter()
        .filter_map(|&k| {
            let values = snapshot.values(k).ok()?;
            Some((k, stats::summarize(&values)?))
        })
        .collect();
    Stage {
        name: name.into(),
        count: snapshot.len(),
        hours: snapshot.total_hours(),
        metrics,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRun {
    pub config: PipelineConfig,
    pub outcome: FilterOutcome,
    pub scores: SubsetScores,
    /// Original, processed, retained and eliminated.
    pub stages: Vec<Stage>,
    pub raw: AggregateMetrics,
    pub retained: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFailure {
    pub config: PipelineConfig,
    /// DR is still defined when quality ratios are not.
    pub dr: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub weights: ScoreWeights,
    pub mcd_reference_db: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            weights: ScoreWeights::default(),
            mcd_reference_db: scoring::MCD_REFERENCE_DB,
        }
    }
}

fn attach(config: &PipelineConfig, e: Error) -> Error {
    Error::Config {
        config: config.name(),
        source: Box::new(e),
    }
}

/// Filters the configuration's processed snapshot and scores the retained
/// set against `raw`. MCD counts iff the enhancement is not `none`.
pub fn run_config(
    raw: &CorpusSnapshot,
    config: &PipelineConfig,
    processed: &BTreeMap<String, CorpusSnapshot>,
    options: &RunOptions,
) -> Result<ConfigRun> {
    let inner = || -> Result<ConfigRun> {
        config.validate()?;
        let snapshot = processed.get(&config.enhancement).ok_or_else(|| {
            Error::invalid(format!(
                "no snapshot for enhancement `{}`",
                config.enhancement
            ))
        })?;
        check_alignment(raw, snapshot)?;
        let outcome = apply_filter(snapshot, config.filter_metric, config.threshold)?;
        let kinds = scoring::required_kinds(config.denoised());
        let raw_kinds: Vec<MetricKind> = kinds
            .iter()
            .copied()
            .filter(|k| *k != MetricKind::Mcd)
            .collect();
        let raw_agg = scoring::aggregate(raw, &raw_kinds)?;
        let mut all_kinds = kinds.clone();
        all_kinds.push(config.filter_metric);
        let stages = alloc::vec![
            stage("original", raw, &all_kinds),
            stage("processed", snapshot, &all_kinds),
            stage("retained", &outcome.retained, &all_kinds),
            stage("eliminated", &outcome.eliminated, &all_kinds),
        ];
        let retained = scoring::aggregate(&outcome.retained, &kinds)?;
        let scores = scoring::score(
            &raw_agg,
            &retained,
            config.denoised(),
            options.weights,
            options.mcd_reference_db,
        )?;
        Ok(ConfigRun {
            config: config.clone(),
            outcome,
            scores,
            stages,
            raw: raw_agg,
            retained,
        })
    };
    inner().map_err(|e| attach(config, e))
}

/// [`run_config`] with the error turned into a quarantined failure record.
pub fn run_config_or_failure(
    raw: &CorpusSnapshot,
    config: &PipelineConfig,
    processed: &BTreeMap<String, CorpusSnapshot>,
    options: &RunOptions,
) -> core::result::Result<ConfigRun, ConfigFailure> {
    run_config(raw, config, processed, options).map_err(|error| {
        let dr = processed.get(&config.enhancement).and_then(|p| {
            let kept = apply_filter(p, config.filter_metric, config.threshold).ok()?;
            let raw_h = raw.total_hours();
            (raw_h > 0.0).then(|| 1.0 - kept.retained.total_hours() / raw_h)
        });
        ConfigFailure {
            config: config.clone(),
            dr,
            error: error.to_string(),
        }
    })
}

/// The quantities plotted against each other per configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub config: String,
    pub dataset_reduction: f64,
    /// `100 (P - R) / R`.
    pub pesq_improvement_pct: f64,
    /// `100 (R - P) / R`: a shorter decay counts as improvement.
    pub t30_improvement_pct: f64,
    /// `F0std_P - F0std_R`, Hz.
    pub f0std_diff: f64,
}

pub fn scatter_point(run: &ConfigRun) -> Result<ScatterPoint> {
    let m = |a: &AggregateMetrics, k| a.mean(k);
    let (pesq_r, pesq_p) = (
        m(&run.raw, MetricKind::Pesq)?,
        m(&run.retained, MetricKind::Pesq)?,
    );
    let (t30_r, t30_p) = (
        m(&run.raw, MetricKind::T30)?,
        m(&run.retained, MetricKind::T30)?,
    );
    let f0_diff = m(&run.retained, MetricKind::F0Std)? - m(&run.raw, MetricKind::F0Std)?;
    Ok(ScatterPoint {
        config: run.config.name(),
        dataset_reduction: run.scores.dr,
        pesq_improvement_pct: 100.0 * (pesq_p - pesq_r) / pesq_r,
        t30_improvement_pct: 100.0 * (t30_r - t30_p) / t30_r,
        f0std_diff: f0_diff,
    })
}
