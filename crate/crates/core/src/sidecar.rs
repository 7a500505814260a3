//! Externally computed per-utterance values (one metric per table) and word
//! timestamps, plus the merge of a metric table into a snapshot.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::error::RowIssue;
use crate::metric::MetricKind;
use crate::{Error, Result};

/// A validated `id -> value` table for a single metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub metric: MetricKind,
    rows: BTreeMap<String, f64>,
}

impl MetricTable {
    /// Validates rows given as `(line, id, value)`. Every offending row is
    /// reported; a duplicate id is always fatal.
    pub fn from_rows<I>(metric: MetricKind, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Option<usize>, String, f64)>,
    {
        let mut table = BTreeMap::new();
        let mut issues = Vec::new();
        for (line, id, value) in rows {
            if id.is_empty() {
                issues.push(RowIssue {
                    line,
                    id,
                    reason: "empty id".into(),
                });
                continue;
            }
            if let Err(reason) = metric.check(value) {
                issues.push(RowIssue {
                    line,
                    id,
                    reason: format!("{reason} ({value})"),
                });
                continue;
            }
            if table.contains_key(&id) {
                return Err(Error::DuplicateId(id));
            }
            table.insert(id, value);
        }
        if !issues.is_empty() {
            return Err(Error::InvalidRows(issues));
        }
        Ok(MetricTable {
            metric,
            rows: table,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.rows.get(id).copied()
    }

    /// Rows in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordStamp {
    #[serde(rename = "w")]
    pub word: String,
    pub start: f64,
    pub end: f64,
}

/// Per-utterance word timestamps, validated to be ordered and non-overlapping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimestampTable {
    rows: BTreeMap<String, Vec<WordStamp>>,
}

impl TimestampTable {
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Option<usize>, String, Vec<WordStamp>)>,
    {
        let mut table = BTreeMap::new();
        let mut issues = Vec::new();
        for (line, id, words) in rows {
            if let Some(reason) = check_words(&words) {
                issues.push(RowIssue {
                    line,
                    id,
                    reason: reason.into(),
                });
                continue;
            }
            if table.contains_key(&id) {
                return Err(Error::DuplicateId(id));
            }
            table.insert(id, words);
        }
        if !issues.is_empty() {
            return Err(Error::InvalidRows(issues));
        }
        Ok(TimestampTable { rows: table })
    }

    pub fn get(&self, id: &str) -> Option<&[WordStamp]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[WordStamp])> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

fn check_words(words: &[WordStamp]) -> Option<&'static str> {
    let mut prev_end = f64::NEG_INFINITY;
    for w in words {
        if !(w.start.is_finite() && w.end.is_finite()) || w.start < 0.0 {
            return Some("word times must be finite and non-negative");
        }
        if w.end < w.start {
            return Some("word ends before it starts");
        }
        if w.start < prev_end {
            return Some("words overlap or are out of order");
        }
        prev_end = w.end;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoveragePolicy {
    /// Every snapshot utterance must receive a value.
    #[default]
    Strict,
    /// Gaps allowed; the achieved coverage is recorded in provenance.
    Partial,
}

/// What a table's ids are matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeKey {
    #[default]
    UtteranceId,
    /// Each utterance inherits the value of its source recording. Used for
    /// recording-level ground truth attached after segmentation.
    SourceId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub snapshot: CorpusSnapshot,
    pub coverage: f64,
    /// Ids whose existing value for the metric was replaced by a different one.
    pub replaced: Vec<String>,
    /// Table ids that matched nothing in the snapshot.
    pub unmatched: usize,
}

/// Attaches `table`'s values to the matching utterances.
///
/// Lineage fields and durations are never touched. Re-merging an identical
/// table is a no-op; a differing value replaces the old one and is listed in
/// [`MergeReport::replaced`].
pub fn merge(
    snapshot: &CorpusSnapshot,
    table: &MetricTable,
    policy: CoveragePolicy,
    key: MergeKey,
) -> Result<MergeReport> {
    let metric = table.metric;
    let lookup = |u: &crate::Utterance| match key {
        MergeKey::UtteranceId => table.get(&u.id),
        MergeKey::SourceId => table.get(&u.source_id),
    };

    let missing: Vec<String> = snapshot
        .utterances()
        .iter()
        .filter(|u| lookup(u).is_none())
        .map(|u| u.id.clone())
        .collect();
    if policy == CoveragePolicy::Strict && !missing.is_empty() {
        return Err(Error::missing_coverage(metric, missing));
    }

    let mut out = snapshot.clone();
    let values: Vec<Option<f64>> = snapshot.utterances().iter().map(lookup).collect();
    let mut replaced = Vec::new();
    for ((id, metrics), value) in out.metrics_mut().zip(values) {
        if let Some(v) = value {
            if let Some(old) = metrics.insert(metric, v) {
                if old.to_bits() != v.to_bits() {
                    replaced.push(String::from(id));
                }
            }
        }
    }

    let matched_keys: alloc::collections::BTreeSet<&str> = snapshot
        .utterances()
        .iter()
        .map(|u| match key {
            MergeKey::UtteranceId => u.id.as_str(),
            MergeKey::SourceId => u.source_id.as_str(),
        })
        .collect();
    let unmatched = table
        .iter()
        .filter(|(id, _)| !matched_keys.contains(id))
        .count();

    let coverage = out.coverage(metric);
    out.provenance.coverage.insert(metric, coverage);
    Ok(MergeReport {
        snapshot: out,
        coverage,
        replaced,
        unmatched,
    })
}
