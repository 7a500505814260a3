//! Energy-based voice activity detection, speech-rate classes and
//! concatenation of detected segments toward a target length distribution.

use alloc::string::String;

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dsp::{FramePlan, Window};
use crate::sidecar::WordStamp;
use crate::stats;
use crate::{Error, Result};

pub const FRAME_MS: f64 = 30.0;
pub const HOP_MS: f64 = 10.0;
/// Percentile of frame log-energy taken as the noise floor.
pub const FLOOR_PERCENTILE: f64 = 10.0;
const ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadParams {
    /// Offset above the noise floor, dB.
    pub threshold_db: f64,
    pub min_speech_ms: f64,
    pub min_silence_ms: f64,
    pub pad_ms: f64,
}

impl VadParams {
    pub const NAMES: [&'static str; 4] =
        ["threshold_db", "min_speech_ms", "min_silence_ms", "pad_ms"];
    pub const RANGES: [(f64, f64); 4] = [(0.0, 30.0), (30.0, 500.0), (30.0, 1000.0), (0.0, 300.0)];

    pub fn values(&self) -> [f64; 4] {
        [
            self.threshold_db,
            self.min_speech_ms,
            self.min_silence_ms,
            self.pad_ms,
        ]
    }

    pub fn from_values(values: [f64; 4]) -> Result<Self> {
        let p = VadParams {
            threshold_db: values[0],
            min_speech_ms: values[1],
            min_silence_ms: values[2],
            pad_ms: values[3],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values()[i])
    }

    pub fn validate(&self) -> Result<()> {
        for ((name, (lo, hi)), v) in Self::NAMES.iter().zip(Self::RANGES).zip(self.values()) {
            if !(v >= lo && v <= hi) {
                return Err(Error::invalid(alloc::format!(
                    "{name} = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

impl Default for VadParams {
    fn default() -> Self {
        VadParams {
            threshold_db: 10.0,
            min_speech_ms: 100.0,
            min_silence_ms: 300.0,
            pad_ms: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
}

impl Segment {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Segment { start_s, end_s }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Frame log-energies of one buffer, reusable across parameter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEnergies {
    pub energies_db: Vec<f64>,
    pub floor_db: f64,
    pub hop_s: f64,
    pub frame_len_s: f64,
    pub duration_s: f64,
}

impl FrameEnergies {
    /// 30 ms frames every 10 ms, `10 log10(mean square + 1e-12)`. A buffer
    /// shorter than one frame is treated as a single frame.
    pub fn compute(samples: &[f64], sample_rate: u32) -> Self {
        let plan = FramePlan::new(FRAME_MS, HOP_MS, Window::Rectangular);
        let energy = |f: &[f64]| {
            10.0 * (stats::sum(f.iter().map(|v| v * v)) / f.len() as f64 + ENERGY_FLOOR).log10()
        };
        let mut energies_db: Vec<f64> = plan.frames(samples, sample_rate).map(energy).collect();
        if energies_db.is_empty() && !samples.is_empty() {
            energies_db.push(energy(samples));
        }
        let floor_db = stats::percentile(&energies_db, FLOOR_PERCENTILE).unwrap_or(0.0);
        let sr = sample_rate as f64;
        FrameEnergies {
            energies_db,
            floor_db,
            hop_s: plan.hop(sample_rate) as f64 / sr,
            frame_len_s: plan.frame_len(sample_rate) as f64 / sr,
            duration_s: samples.len() as f64 / sr,
        }
    }

    pub fn len(&self) -> usize {
        self.energies_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies_db.is_empty()
    }

    /// Centre of frame `i`; a speech frame stands for `centre ± hop/2`.
    pub fn centre(&self, i: usize) -> f64 {
        i as f64 * self.hop_s + 0.5 * self.frame_len_s.min(self.duration_s)
    }

    pub fn detect(&self, params: &VadParams) -> Vec<Segment> {
        let limit = self.floor_db + params.threshold_db;
        let half = 0.5 * self.hop_s;
        let mut runs = Vec::new();
        let mut start = None;
        for (i, e) in self.energies_db.iter().enumerate() {
            match (*e > limit, start) {
                (true, None) => start = Some(i),
                (false, Some(a)) => {
                    runs.push(a..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            runs.push(a..self.energies_db.len());
        }
        let clip = |t: f64| t.clamp(0.0, self.duration_s);
        let min_speech = params.min_speech_ms / 1000.0;
        let mut segments: Vec<Segment> = Vec::new();
        for run in runs {
            let seg = Segment::new(
                clip(self.centre(run.start) - half),
                clip(self.centre(run.end - 1) + half),
            );
            if seg.duration() < min_speech {
                continue;
            }
            match segments.last_mut() {
                Some(prev) if seg.start_s - prev.end_s < params.min_silence_ms / 1000.0 => {
                    prev.end_s = seg.end_s
                }
                _ => segments.push(seg),
            }
        }
        let pad = params.pad_ms / 1000.0;
        let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            let padded = Segment::new(clip(seg.start_s - pad), clip(seg.end_s + pad));
            match out.last_mut() {
                Some(prev) if padded.start_s <= prev.end_s => {
                    prev.end_s = prev.end_s.max(padded.end_s)
                }
                _ => out.push(padded),
            }
        }
        out
    }

    /// Speech/non-speech decision per frame for the given extents.
    pub fn mask(&self, extents: impl Iterator<Item = (f64, f64)> + Clone) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                let c = self.centre(i);
                extents.clone().any(|(a, b)| c >= a && c < b)
            })
            .collect()
    }
}

/// Ordered, non-overlapping speech segments of `samples`.
pub fn detect(samples: &[f64], sample_rate: u32, params: &VadParams) -> Vec<Segment> {
    if samples.is_empty() {
        return Vec::new();
    }
    FrameEnergies::compute(samples, sample_rate).detect(params)
}

/// Reference mask: frames whose centre lies inside a word.
pub fn word_mask(energies: &FrameEnergies, words: &[WordStamp]) -> Vec<bool> {
    energies.mask(words.iter().map(|w| (w.start, w.end)))
}

pub fn segment_mask(energies: &FrameEnergies, segments: &[Segment]) -> Vec<bool> {
    energies.mask(segments.iter().map(|s| (s.start_s, s.end_s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpeechRateClass {
    Slow,
    Normal,
    Fast,
}

impl SpeechRateClass {
    pub const ALL: [SpeechRateClass; 3] = [
        SpeechRateClass::Slow,
        SpeechRateClass::Normal,
        SpeechRateClass::Fast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpeechRateClass::Slow => "slow",
            SpeechRateClass::Normal => "normal",
            SpeechRateClass::Fast => "fast",
        }
    }
}

impl fmt::Display for SpeechRateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpeechRateClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpeechRateClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(alloc::format!("unknown speech-rate class `{s}`")))
    }
}

/// `(slow_max, fast_min)` in words per second. The defaults are arbitrary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateBounds {
    pub slow_max: f64,
    pub fast_min: f64,
}

impl Default for RateBounds {
    fn default() -> Self {
        RateBounds {
            slow_max: 2.5,
            fast_min: 4.0,
        }
    }
}

impl RateBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.slow_max >= 0.0 && self.slow_max <= self.fast_min && self.fast_min.is_finite()) {
            return Err(Error::invalid("rate bounds need 0 <= slow_max <= fast_min"));
        }
        Ok(())
    }
}

pub fn classify_rate(words_per_second: f64, bounds: RateBounds) -> SpeechRateClass {
    if words_per_second < bounds.slow_max {
        SpeechRateClass::Slow
    } else if words_per_second > bounds.fast_min {
        SpeechRateClass::Fast
    } else {
        SpeechRateClass::Normal
    }
}

/// Word count over the span from the first word start to the last word end.
pub fn words_per_second(words: &[WordStamp]) -> Option<f64> {
    let (first, last) = (words.first()?, words.last()?);
    let span = last.end - first.start;
    (span > 0.0).then(|| words.len() as f64 / span)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LengthTarget {
    pub mean_s: f64,
    pub std_s: f64,
    /// Longest silence bridged when joining segments.
    pub max_gap_s: f64,
    pub hard_max_s: f64,
    /// Groups shorter than this are discarded.
    pub min_utt_s: f64,
}

impl Default for LengthTarget {
    fn default() -> Self {
        LengthTarget {
            mean_s: 8.0,
            std_s: 2.0,
            max_gap_s: 0.5,
            hard_max_s: 15.0,
            min_utt_s: 1.0,
        }
    }
}

impl LengthTarget {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_s > 0.0 && self.mean_s <= self.hard_max_s) {
            return Err(Error::invalid(
                "length target needs 0 < mean_s <= hard_max_s",
            ));
        }
        if !(self.std_s >= 0.0 && self.max_gap_s >= 0.0 && self.min_utt_s >= 0.0) {
            return Err(Error::invalid(
                "std_s, max_gap_s and min_utt_s must be >= 0",
            ));
        }
        Ok(())
    }
}

/// One concatenated utterance: the covered extent and the input segments it
/// joins.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub extent: Segment,
    pub segments: Range<usize>,
}

fn extent(segments: &[Segment], r: &Range<usize>) -> Segment {
    Segment::new(segments[r.start].start_s, segments[r.end - 1].end_s)
}

fn length_error(lengths: &[f64], target: &LengthTarget) -> f64 {
    let mean = stats::mean(lengths).unwrap_or(0.0);
    let std = stats::population_std(lengths).unwrap_or(0.0);
    (mean - target.mean_s).powi(2) + (std - target.std_s).powi(2)
}

/// Greedy grouping of ordered segments followed by one left-to-right pass of
/// single-segment boundary moves. Segments are never split.
pub fn concat_to_target(segments: &[Segment], target: &LengthTarget) -> Result<Vec<Group>> {
    target.validate()?;
    let bridgeable = |i: usize| segments[i + 1].start_s - segments[i].end_s <= target.max_gap_s;
    let span = |r: &Range<usize>| extent(segments, r).duration();

    let mut groups: Vec<Range<usize>> = Vec::new();
    let mut i = 0;
    while i < segments.len() {
        let mut r = i..i + 1;
        while r.end < segments.len() && bridgeable(r.end - 1) {
            let cur = span(&r);
            let next = span(&(r.start..r.end + 1));
            let toward = (next - target.mean_s).abs() < (cur - target.mean_s).abs();
            if cur >= target.mean_s - target.std_s || next > target.hard_max_s || !toward {
                break;
            }
            r.end += 1;
        }
        i = r.end;
        groups.push(r);
    }

    let mut lengths: Vec<f64> = groups.iter().map(span).collect();
    for k in 0..groups.len().saturating_sub(1) {
        if groups[k].end != groups[k + 1].start || !bridgeable(groups[k].end - 1) {
            continue;
        }
        let mut best = length_error(&lengths, target);
        let mut choice = None;
        let (left, right) = (groups[k].clone(), groups[k + 1].clone());
        let moves = [
            (left.len() > 1).then(|| (left.start..left.end - 1, left.end - 1..right.end)),
            (right.len() > 1).then(|| (left.start..left.end + 1, right.start + 1..right.end)),
        ];
        for (a, b) in moves.into_iter().flatten() {
            let (la, lb) = (span(&a), span(&b));
            if la > target.hard_max_s || lb > target.hard_max_s {
                continue;
            }
            let mut trial = lengths.clone();
            trial[k] = la;
            trial[k + 1] = lb;
            let err = length_error(&trial, target);
            if err < best {
                best = err;
                choice = Some((a, b, la, lb));
            }
        }
        if let Some((a, b, la, lb)) = choice {
            groups[k] = a;
            groups[k + 1] = b;
            lengths[k] = la;
            lengths[k + 1] = lb;
        }
    }

    Ok(groups
        .into_iter()
        .zip(lengths)
        .filter(|(_, len)| *len >= target.min_utt_s)
        .map(|(r, _)| Group {
            extent: extent(segments, &r),
            segments: r,
        })
        .collect())
}

/// Pooled frame-level F1 of `detected` against `reference`; 1 when neither
/// contains speech.
pub fn frame_f1<'a>(pairs: impl IntoIterator<Item = (&'a [bool], &'a [bool])>) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (detected, reference) in pairs {
        for (d, r) in detected.iter().zip(reference) {
            match (d, r) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Plain `key = value` lines, one per parameter, `#` comments allowed.
pub fn params_to_text(params: &VadParams) -> String {
    let mut out = String::new();
    for (name, v) in VadParams::NAMES.iter().zip(params.values()) {
        out.push_str(&alloc::format!("{name} = {v}\n"));
    }
    out
}

pub fn params_from_text(text: &str) -> Result<VadParams> {
    let mut values = VadParams::default().values();
    let mut seen = [false; 4];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(alloc::format!(
                "line {}: expected `key = value`",
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let idx = VadParams::NAMES
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| {
                Error::invalid(alloc::format!("line {}: unknown key `{key}`", lineno + 1))
            })?;
        values[idx] = value.trim().parse().map_err(|_| {
            Error::invalid(alloc::format!(
                "line {}: `{}` is not a number",
                lineno + 1,
                value.trim()
            ))
        })?;
        seen[idx] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::invalid(alloc::format!(
            "missing key `{}`",
            VadParams::NAMES[i]
        )));
    }
    VadParams::from_values(values)
}
