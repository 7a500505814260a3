//! The declarative run configuration (TOML).
//!
//! Relative paths inside the file resolve against the file's directory.
//! Command-line flags override `seed` and `out_dir`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use curate_core::dsp::YinSettings;
use curate_core::scoring::{ScoreWeights, MCD_REFERENCE_DB};
use curate_core::sidecar::{CoveragePolicy, MergeKey};
use curate_core::synth::{CorpusLayout, Enhancement};
use curate_core::tpe::TpeSettings;
use curate_core::vad::{LengthTarget, RateBounds};
use curate_core::MetricKind;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0;

/// The unprocessed variant every other one is scored against.
pub const RAW_VARIANT: &str = curate_core::sweep::NO_ENHANCEMENT;

/// Processing stage a snapshot file belongs to: `<variant>.<stage>.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingested,
    Segmented,
    Attached,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingested => "ingested",
            Stage::Segmented => "segmented",
            Stage::Attached => "attached",
        }
    }
}

/// One enhancement variant and the manifest of its audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    #[default]
    Id,
    /// Match the table against each utterance's source recording.
    Source,
}

impl From<KeyKind> for MergeKey {
    fn from(k: KeyKind) -> Self {
        match k {
            KeyKind::Id => MergeKey::UtteranceId,
            KeyKind::Source => MergeKey::SourceId,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Strict,
    Partial,
}

impl From<PolicyKind> for CoveragePolicy {
    fn from(p: PolicyKind) -> Self {
        match p {
            PolicyKind::Strict => CoveragePolicy::Strict,
            PolicyKind::Partial => CoveragePolicy::Partial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidecarStage {
    Ingest,
    #[default]
    Attach,
}

/// An external metric file. `{variant}` in `path` expands per variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarSpec {
    pub metric: MetricKind,
    pub path: String,
    /// Variants the file applies to; all when absent.
    #[serde(default)]
    pub variants: Option<Vec<String>>,
    #[serde(default)]
    pub key: KeyKind,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default)]
    pub stage: SidecarStage,
}

impl SidecarSpec {
    pub fn applies_to(&self, variant: &str) -> bool {
        self.variants
            .as_ref()
            .is_none_or(|v| v.iter().any(|n| n == variant))
    }

    pub fn path_for(&self, variant: &str) -> String {
        self.path.replace("{variant}", variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub metric: MetricKind,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSection {
    /// TPE trials per speech-rate class.
    pub budget: usize,
    pub profile: String,
    pub rate_bounds: RateBounds,
    pub length: LengthTarget,
}

impl Default for SegmentSection {
    fn default() -> Self {
        SegmentSection {
            budget: 60,
            profile: "tuned".into(),
            rate_bounds: RateBounds::default(),
            length: LengthTarget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignKind {
    #[default]
    None,
    Dtw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub stage: Stage,
    pub mcd_alignment: AlignKind,
    pub yin: YinSettings,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            stage: Stage::Segmented,
            mcd_alignment: AlignKind::None,
            yin: YinSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttachSection {
    pub stage: Stage,
    /// Policy for the natively computed metric files.
    pub policy: PolicyKind,
}

impl Default for AttachSection {
    fn default() -> Self {
        AttachSection {
            stage: Stage::Segmented,
            policy: PolicyKind::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub stage: Stage,
    pub sensitivity_delta: f64,
    pub mcd_reference_db: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            stage: Stage::Attached,
            sensitivity_delta: 0.1,
            mcd_reference_db: MCD_REFERENCE_DB,
        }
    }
}

/// Synthetic corpus generation. Per-source parameters are drawn uniformly
/// from the given ranges, SNR stratified across sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub sources: usize,
    pub duration_s: f64,
    pub snr_db: (f64, f64),
    pub t60_s: (f64, f64),
    pub f0_hz: (f64, f64),
    pub vibrato_hz: (f64, f64),
    pub vibrato_depth_hz: (f64, f64),
    pub words_per_second: (f64, f64),
    pub phrase_words: (u32, u32),
    pub phrase_pause_s: (f64, f64),
    pub enhancements: Vec<Enhancement>,
}

impl Default for SynthSection {
    fn default() -> Self {
        let layout = CorpusLayout::default();
        SynthSection {
            sources: 20,
            duration_s: 30.0,
            snr_db: (2.0, 24.0),
            t60_s: (0.25, 0.45),
            f0_hz: (100.0, 220.0),
            vibrato_hz: (4.0, 6.0),
            vibrato_depth_hz: (0.0, 10.0),
            words_per_second: layout.words_per_second,
            phrase_words: layout.phrase_words,
            phrase_pause_s: layout.phrase_pause_s,
            enhancements: vec![
                Enhancement {
                    label: "dfn".into(),
                    snr_gain_db: 8.0,
                    t60_scale: 0.6,
                },
                Enhancement {
                    label: "demucs".into(),
                    snr_gain_db: 5.0,
                    t60_scale: 0.8,
                },
            ],
        }
    }
}

impl SynthSection {
    pub fn layout(&self, sample_rate: u32) -> CorpusLayout {
        CorpusLayout {
            sample_rate,
            duration_s: self.duration_s,
            words_per_second: self.words_per_second,
            phrase_words: self.phrase_words,
            phrase_pause_s: self.phrase_pause_s,
        }
    }
}

fn default_filters() -> Vec<FilterSpec> {
    vec![
        FilterSpec {
            metric: MetricKind::MosNisqa,
            thresholds: vec![3.0, 3.5, 3.8, 4.2],
        },
        FilterSpec {
            metric: MetricKind::MosDnsmos,
            thresholds: vec![2.7, 3.0, 3.2, 3.4],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sample_rate: u32,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Fraction of manifest rows allowed to fail ingest.
    pub error_limit: f64,
    /// Word timestamps of the raw variant's utterances.
    pub timestamps: Option<PathBuf>,
    pub variants: Vec<Variant>,
    pub sidecars: Vec<SidecarSpec>,
    pub filters: Vec<FilterSpec>,
    pub weights: ScoreWeights,
    pub tpe: TpeSettings,
    pub segment: SegmentSection,
    pub metrics: MetricsSection,
    pub attach: AttachSection,
    pub sweep: SweepSection,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sample_rate: 16_000,
            out_dir: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            error_limit: 0.0,
            timestamps: None,
            variants: Vec::new(),
            sidecars: Vec::new(),
            filters: default_filters(),
            weights: ScoreWeights::default(),
            tpe: TpeSettings::default(),
            segment: SegmentSection::default(),
            metrics: MetricsSection::default(),
            attach: AttachSection::default(),
            sweep: SweepSection::default(),
            synth: SynthSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Value checks that need no filesystem access.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            bail!("sample_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.error_limit) {
            bail!("error_limit must lie in [0, 1]");
        }
        let mut names = HashSet::new();
        for v in &self.variants {
            if v.name.is_empty() || !names.insert(v.name.as_str()) {
                bail!("variant names must be non-empty and unique (`{}`)", v.name);
            }
        }
        if !self.variants.is_empty() && !names.contains(RAW_VARIANT) {
            bail!("variants must include the unprocessed `{RAW_VARIANT}` variant");
        }
        for f in &self.filters {
            if f.thresholds.is_empty() {
                bail!("filter on {} has no thresholds", f.metric);
            }
        }
        self.weights.validate()?;
        self.tpe.validate()?;
        self.segment.rate_bounds.validate()?;
        self.segment.length.validate()?;
        if self.segment.budget == 0 {
            bail!("segment.budget must be at least 1");
        }
        if !(self.sweep.sensitivity_delta > 0.0) {
            bail!("sweep.sensitivity_delta must be positive");
        }
        if !(self.sweep.mcd_reference_db > 0.0) {
            bail!("sweep.mcd_reference_db must be positive");
        }
        let s = &self.synth;
        if s.sources == 0 || !(s.duration_s >= 1.0) {
            bail!("synth needs at least one source of at least 1 s");
        }
        let mut labels = HashSet::from([RAW_VARIANT]);
        for e in &s.enhancements {
            if !labels.insert(e.label.as_str()) {
                bail!(
                    "synth enhancement label `{}` is duplicated or equals `{RAW_VARIANT}`",
                    e.label
                );
            }
        }
        Ok(())
    }

    pub fn variant_names(&self) -> Vec<String> {
        self.variants.iter().map(|v| v.name.clone()).collect()
    }
}
