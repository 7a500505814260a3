//! Utterances and corpus snapshots.
//!
//! A [`CorpusSnapshot`] is an ordered, id-unique set of [`Utterance`]s: the
//! raw corpus, or the retained (or eliminated) set of one pipeline
//! configuration. Audio is never stored here, only lineage back into the
//! source recordings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metric::MetricKind;
use crate::stats::KahanSum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    /// Identity of the original recording this utterance was cut from.
    pub source_id: String,
    /// Location of the source audio, as written in the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    pub start_s: f64,
    pub end_s: f64,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub channel_count: u16,
    #[serde(default)]
    pub metrics: BTreeMap<MetricKind, f64>,
}

impl Utterance {
    /// Builds a mono utterance spanning `[start_s, end_s)` of `source_id`.
    pub fn new(
        id: impl Into<String>,
        source_id: impl Into<String>,
        start_s: f64,
        end_s: f64,
        sample_rate: u32,
    ) -> Result<Self> {
        let utt = Utterance {
            id: id.into(),
            source_id: source_id.into(),
            path: None,
            speaker_id: None,
            start_s,
            end_s,
            duration_s: end_s - start_s,
            sample_rate,
            channel_count: 1,
            metrics: BTreeMap::new(),
        };
        utt.validate()?;
        Ok(utt)
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Self {
        self.speaker_id = Some(speaker.into());
        self
    }

    pub fn with_metric(mut self, kind: MetricKind, value: f64) -> Self {
        self.metrics.insert(kind, value);
        self
    }

    pub fn metric(&self, kind: MetricKind) -> Option<f64> {
        self.metrics.get(&kind).copied()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidUtterance {
            id: self.id.clone(),
            reason: reason.into(),
        };
        if self.id.is_empty() {
            return Err(bad("empty id"));
        }
        if !(self.start_s.is_finite() && self.end_s.is_finite()) || self.start_s < 0.0 {
            return Err(bad("start/end must be finite and start non-negative"));
        }
        if !(self.duration_s > 0.0) {
            return Err(bad("duration must be positive"));
        }
        let expected = self.end_s - self.start_s;
        if (self.duration_s - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(bad("duration_s does not equal end_s - start_s"));
        }
        if self.sample_rate == 0 {
            return Err(bad("sample rate must be positive"));
        }
        if self.channel_count == 0 {
            return Err(bad("channel count must be positive"));
        }
        Ok(())
    }
}

/// Bookkeeping attached to a snapshot: which fraction of utterances carries
/// each metric and where values came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub coverage: BTreeMap<MetricKind, f64>,
    #[serde(default)]
    pub sources: BTreeMap<MetricKind, String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSnapshot {
    pub name: String,
    utterances: Vec<Utterance>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl CorpusSnapshot {
    /// Validates every utterance and id uniqueness.
    pub fn new(name: impl Into<String>, utterances: Vec<Utterance>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for utt in &utterances {
            utt.validate()?;
            if !seen.insert(utt.id.as_str()) {
                return Err(Error::DuplicateId(utt.id.clone()));
            }
        }
        Ok(CorpusSnapshot {
            name: name.into(),
            utterances,
            provenance: Provenance::default(),
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        CorpusSnapshot {
            name: name.into(),
            utterances: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    /// Mutable access to the metric maps. Lineage fields stay read-only so
    /// callers cannot break the snapshot invariants.
    pub fn metrics_mut(&mut self) -> impl Iterator<Item = (&str, &mut BTreeMap<MetricKind, f64>)> {
        self.utterances
            .iter_mut()
            .map(|u| (u.id.as_str(), &mut u.metrics))
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.utterances.iter().map(|u| u.id.as_str())
    }

    pub fn total_seconds(&self) -> f64 {
        let mut acc = KahanSum::new();
        acc.extend(self.utterances.iter().map(|u| u.duration_s));
        acc.total()
    }

    pub fn total_hours(&self) -> f64 {
        self.total_seconds() / 3600.0
    }

    /// Fraction of utterances that carry `kind` (1 for an empty snapshot).
    pub fn coverage(&self, kind: MetricKind) -> f64 {
        if self.utterances.is_empty() {
            return 1.0;
        }
        let have = self
            .utterances
            .iter()
            .filter(|u| u.metrics.contains_key(&kind))
            .count();
        have as f64 / self.utterances.len() as f64
    }

    /// Ids lacking `kind`, in snapshot order.
    pub fn missing(&self, kind: MetricKind) -> Vec<String> {
        self.utterances
            .iter()
            .filter(|u| !u.metrics.contains_key(&kind))
            .map(|u| u.id.clone())
            .collect()
    }

    /// Errors unless every utterance carries `kind`.
    pub fn require(&self, kind: MetricKind) -> Result<()> {
        let missing = self.missing(kind);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::missing_coverage(kind, missing))
        }
    }

    /// Per-utterance values of `kind`; errors on any gap.
    pub fn values(&self, kind: MetricKind) -> Result<Vec<f64>> {
        self.require(kind)?;
        Ok(self.utterances.iter().map(|u| u.metrics[&kind]).collect())
    }

    /// Keeps the utterances matching `keep`, preserving order.
    pub fn filtered(
        &self,
        name: impl Into<String>,
        mut keep: impl FnMut(&Utterance) -> bool,
    ) -> Self {
        CorpusSnapshot {
            name: name.into(),
            utterances: self
                .utterances
                .iter()
                .filter(|u| keep(u))
                .cloned()
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Concatenates two snapshots with disjoint ids.
    pub fn concat(&self, other: &CorpusSnapshot, name: impl Into<String>) -> Result<Self> {
        let mut utterances = self.utterances.clone();
        utterances.extend(other.utterances.iter().cloned());
        CorpusSnapshot::new(name, utterances)
    }

    pub fn into_utterances(self) -> Vec<Utterance> {
        self.utterances
    }
}
