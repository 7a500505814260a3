//! YIN fundamental-frequency tracking.
//!
//! Per frame: squared-difference function, cumulative-mean normalisation,
//! the first dip below the absolute threshold (followed down to its local
//! minimum), and parabolic refinement of the lag. Frames without a dip are
//! unvoiced.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::frame::{FramePlan, Window};
use crate::{stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YinSettings {
    /// The window is ignored; YIN works on raw frames.
    pub plan: FramePlan,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub threshold: f64,
}

impl Default for YinSettings {
    fn default() -> Self {
        YinSettings {
            plan: FramePlan::new(40.0, 10.0, Window::Rectangular),
            fmin_hz: 50.0,
            fmax_hz: 600.0,
            threshold: 0.10,
        }
    }
}

/// Per-frame F0; `None` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub f0_hz: Vec<Option<f64>>,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub hop_s: f64,
    pub frame_len_s: f64,
}

impl F0Track {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().filter_map(|f| *f)
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced().count()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_hz.is_empty() {
            0.0
        } else {
            self.voiced_count() as f64 / self.f0_hz.len() as f64
        }
    }

    /// Centre time of frame `i`, seconds.
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 * self.hop_s + 0.5 * self.frame_len_s
    }
}

pub fn yin_f0(samples: &[f64], sample_rate: u32, settings: &YinSettings) -> Result<F0Track> {
    settings.plan.validate()?;
    let sr = sample_rate as f64;
    if !(settings.fmin_hz > 0.0 && settings.fmin_hz < settings.fmax_hz) {
        return Err(Error::invalid("yin needs 0 < fmin < fmax"));
    }
    if !(settings.threshold > 0.0) {
        return Err(Error::invalid("yin threshold must be positive"));
    }
    let frame_len = settings.plan.frame_len(sample_rate);
    let max_lag = (sr / settings.fmin_hz).ceil() as usize;
    if frame_len < 2 * max_lag {
        return Err(Error::invalid("yin frame must cover two periods of fmin"));
    }
    let min_lag = ((sr / settings.fmax_hz).floor() as usize).max(2);
    let window = frame_len - max_lag;

    let mut diff = vec![0.0; max_lag + 1];
    let mut cmnd = vec![1.0; max_lag + 1];
    let f0_hz = settings
        .plan
        .frames(samples, sample_rate)
        .map(|frame| {
            difference(frame, window, &mut diff);
            normalize(&diff, &mut cmnd);
            pick_lag(&cmnd, min_lag, settings.threshold)
                .map(|lag| sr / lag)
                .filter(|f| *f >= settings.fmin_hz && *f <= settings.fmax_hz)
        })
        .collect();

    Ok(F0Track {
        f0_hz,
        fmin_hz: settings.fmin_hz,
        fmax_hz: settings.fmax_hz,
        hop_s: settings.plan.hop(sample_rate) as f64 / sr,
        frame_len_s: frame_len as f64 / sr,
    })
}

fn difference(frame: &[f64], window: usize, out: &mut [f64]) {
    out[0] = 0.0;
    let head = &frame[..window];
    for (lag, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = head
            .iter()
            .zip(&frame[lag..lag + window])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
    }
}

fn normalize(diff: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut running = 0.0;
    for lag in 1..diff.len() {
        running += diff[lag];
        out[lag] = if running > 0.0 {
            diff[lag] * lag as f64 / running
        } else {
            1.0
        };
    }
}

fn pick_lag(cmnd: &[f64], min_lag: usize, threshold: f64) -> Option<f64> {
    let last = cmnd.len() - 1;
    let mut lag = (min_lag..=last).find(|&l| cmnd[l] < threshold)?;
    while lag < last && cmnd[lag + 1] < cmnd[lag] {
        lag += 1;
    }
    if lag == 0 || lag == last {
        return Some(lag as f64);
    }
    let (a, b, c) = (cmnd[lag - 1], cmnd[lag], cmnd[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Some(lag as f64 + shift)
}

/// Population std of the voiced frames' F0.
pub fn f0_std(track: &F0Track) -> Result<f64> {
    let voiced: Vec<f64> = track.voiced().collect();
    if voiced.len() < 2 {
        return Err(Error::Undefined("f0_std needs at least two voiced frames"));
    }
    Ok(stats::population_std(&voiced).unwrap_or(0.0))
}
