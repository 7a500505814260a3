//! Mel-frequency cepstral coefficients.
//!
//! Per frame: window, magnitude spectrum, 26 triangular mel filters from
//! 50 Hz to Nyquist, natural log with a 1e-10 floor, orthonormal DCT-II,
//! coefficients 1..=13 (c0 dropped).

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::fft::{magnitude_spectrum, next_pow2};
use super::frame::FramePlan;
use crate::{Error, Result};

pub const NUM_CEPSTRA: usize = 13;
pub const NUM_FILTERS: usize = 26;
pub const LOW_FREQ_HZ: f64 = 50.0;
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CepstraSequence {
    pub coeffs: Vec<[f64; NUM_CEPSTRA]>,
    pub plan: FramePlan,
    pub sample_rate: u32,
}

impl CepstraSequence {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

struct MelFilter {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Reusable MFCC extractor for one sample rate and frame plan.
pub struct MelCepstrum {
    plan: FramePlan,
    sample_rate: u32,
    nfft: usize,
    window: Vec<f64>,
    filters: Vec<MelFilter>,
    dct: Vec<[f64; NUM_FILTERS]>,
}

impl core::fmt::Debug for MelCepstrum {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MelCepstrum")
            .field("plan", &self.plan)
            .field("sample_rate", &self.sample_rate)
            .field("nfft", &self.nfft)
            .finish_non_exhaustive()
    }
}

impl MelCepstrum {
    pub fn new(sample_rate: u32, plan: FramePlan) -> Result<Self> {
        plan.validate()?;
        let nyquist = sample_rate as f64 / 2.0;
        if nyquist <= LOW_FREQ_HZ {
            return Err(Error::invalid("sample rate too low for a 50 Hz mel floor"));
        }
        let frame_len = plan.frame_len(sample_rate);
        let nfft = next_pow2(frame_len);
        let bin_hz = sample_rate as f64 / nfft as f64;

        let (lo, hi) = (hz_to_mel(LOW_FREQ_HZ), hz_to_mel(nyquist));
        let edges: Vec<f64> = (0..NUM_FILTERS + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (NUM_FILTERS + 1) as f64))
            .collect();
        let filters = edges
            .windows(3)
            .map(|e| {
                let (left, centre, right) = (e[0], e[1], e[2]);
                let first_bin = (left / bin_hz).ceil() as usize;
                let last_bin = ((right / bin_hz).floor() as usize).min(nfft / 2);
                let weights = (first_bin..=last_bin)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= centre {
                            (f - left) / (centre - left)
                        } else {
                            (right - f) / (right - centre)
                        }
                        .max(0.0)
                    })
                    .collect();
                MelFilter { first_bin, weights }
            })
            .collect();

        let n = NUM_FILTERS as f64;
        let dct = (1..=NUM_CEPSTRA)
            .map(|k| {
                let mut row = [0.0; NUM_FILTERS];
                for (m, slot) in row.iter_mut().enumerate() {
                    *slot = (2.0 / n).sqrt() * (PI * k as f64 * (m as f64 + 0.5) / n).cos();
                }
                row
            })
            .collect();

        Ok(MelCepstrum {
            plan,
            sample_rate,
            nfft,
            window: plan.window.coefficients(frame_len),
            filters,
            dct,
        })
    }

    pub fn compute(&self, samples: &[f64]) -> Result<CepstraSequence> {
        let frame_len = self.window.len();
        if samples.len() < frame_len {
            return Err(Error::TooShort {
                what: "mfcc input",
                needed: frame_len,
                got: samples.len(),
            });
        }
        let mut buf = alloc::vec![0.0; frame_len];
        let mut log_energy = [0.0; NUM_FILTERS];
        let coeffs = self
            .plan
            .frames(samples, self.sample_rate)
            .map(|frame| {
                for ((b, x), w) in buf.iter_mut().zip(frame).zip(&self.window) {
                    *b = x * w;
                }
                let spectrum = magnitude_spectrum(&buf, self.nfft);
                for (slot, filter) in log_energy.iter_mut().zip(&self.filters) {
                    let e: f64 = filter
                        .weights
                        .iter()
                        .zip(&spectrum[filter.first_bin..])
                        .map(|(w, s)| w * s)
                        .sum();
                    *slot = e.max(LOG_FLOOR).ln();
                }
                let mut c = [0.0; NUM_CEPSTRA];
                for (ck, row) in c.iter_mut().zip(&self.dct) {
                    *ck = row.iter().zip(&log_energy).map(|(a, b)| a * b).sum();
                }
                c
            })
            .collect();
        Ok(CepstraSequence {
            coeffs,
            plan: self.plan,
            sample_rate: self.sample_rate,
        })
    }
}

pub fn mfcc(samples: &[f64], sample_rate: u32, plan: FramePlan) -> Result<CepstraSequence> {
    MelCepstrum::new(sample_rate, plan)?.compute(samples)
}
