use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Window {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl Window {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n <= 1 {
            return alloc::vec![1.0; n];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / denom;
                match self {
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Hamming => 0.54 - 0.46 * x.cos(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// Frame length and hop in milliseconds plus the analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FramePlan {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
}

impl Default for FramePlan {
    fn default() -> Self {
        FramePlan {
            frame_len_ms: 25.0,
            hop_ms: 10.0,
            window: Window::Hann,
        }
    }
}

impl FramePlan {
    pub const fn new(frame_len_ms: f64, hop_ms: f64, window: Window) -> Self {
        FramePlan {
            frame_len_ms,
            hop_ms,
            window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hop_ms > 0.0 && self.hop_ms <= self.frame_len_ms) {
            return Err(Error::invalid(
                "frame plan needs 0 < hop_ms <= frame_len_ms",
            ));
        }
        Ok(())
    }

    pub fn frame_len(&self, sample_rate: u32) -> usize {
        ((self.frame_len_ms * sample_rate as f64 / 1000.0).round() as usize).max(1)
    }

    pub fn hop(&self, sample_rate: u32) -> usize {
        ((self.hop_ms * sample_rate as f64 / 1000.0).round() as usize).max(1)
    }

    /// `1 + floor((len - frame_len) / hop)` for `len >= frame_len`, else 0.
    pub fn frame_count(&self, len: usize, sample_rate: u32) -> usize {
        let fl = self.frame_len(sample_rate);
        if len < fl {
            0
        } else {
            1 + (len - fl) / self.hop(sample_rate)
        }
    }

    /// Iterator over full frames of `samples`.
    pub fn frames<'a>(
        &self,
        samples: &'a [f64],
        sample_rate: u32,
    ) -> impl Iterator<Item = &'a [f64]> + 'a {
        let fl = self.frame_len(sample_rate);
        let hop = self.hop(sample_rate);
        let count = self.frame_count(samples.len(), sample_rate);
        (0..count).map(move |i| &samples[i * hop..i * hop + fl])
    }
}
