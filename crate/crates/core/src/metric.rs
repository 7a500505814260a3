//! Metric kinds carried per utterance, with units, preferred directions and
//! per-kind validity ranges.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which way a metric should move for the corpus to be considered improved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    /// Dispersion-type metrics with no preferred direction (F0 std).
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "PESQ")]
    Pesq,
    #[serde(rename = "SNR")]
    Snr,
    #[serde(rename = "SI_SDR")]
    SiSdr,
    #[serde(rename = "T30")]
    T30,
    #[serde(rename = "C50")]
    C50,
    #[serde(rename = "F0_STD")]
    F0Std,
    #[serde(rename = "MCD")]
    Mcd,
    #[serde(rename = "MOS_NISQA")]
    MosNisqa,
    #[serde(rename = "MOS_DNSMOS")]
    MosDnsmos,
}

impl MetricKind {
    pub const ALL: [MetricKind; 9] = [
        MetricKind::Pesq,
        MetricKind::Snr,
        MetricKind::SiSdr,
        MetricKind::T30,
        MetricKind::C50,
        MetricKind::F0Std,
        MetricKind::Mcd,
        MetricKind::MosNisqa,
        MetricKind::MosDnsmos,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            MetricKind::Pesq => "PESQ",
            MetricKind::Snr => "SNR",
            MetricKind::SiSdr => "SI_SDR",
            MetricKind::T30 => "T30",
            MetricKind::C50 => "C50",
            MetricKind::F0Std => "F0_STD",
            MetricKind::Mcd => "MCD",
            MetricKind::MosNisqa => "MOS_NISQA",
            MetricKind::MosDnsmos => "MOS_DNSMOS",
        }
    }

    pub const fn unit(self) -> &'static str {
        match self {
            MetricKind::Pesq => "MOS-LQO",
            MetricKind::Snr | MetricKind::SiSdr | MetricKind::C50 | MetricKind::Mcd => "dB",
            MetricKind::T30 => "s",
            MetricKind::F0Std => "Hz",
            MetricKind::MosNisqa | MetricKind::MosDnsmos => "MOS",
        }
    }

    pub const fn direction(self) -> Direction {
        match self {
            MetricKind::T30 | MetricKind::Mcd => Direction::Down,
            MetricKind::F0Std => Direction::Neutral,
            _ => Direction::Up,
        }
    }

    pub const fn is_mos(self) -> bool {
        matches!(self, MetricKind::MosNisqa | MetricKind::MosDnsmos)
    }

    /// Closed interval a value of this kind must lie in, if bounded.
    pub const fn valid_range(self) -> (f64, f64) {
        match self {
            MetricKind::MosNisqa | MetricKind::MosDnsmos => (1.0, 5.0),
            MetricKind::F0Std | MetricKind::Mcd => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Checks a single value against the kind's range. Returns a short
    /// reason on failure.
    pub fn check(self, value: f64) -> Result<(), &'static str> {
        if !value.is_finite() {
            return Err("value is not finite");
        }
        if self == MetricKind::T30 && value <= 0.0 {
            return Err("T30 must be > 0 s");
        }
        let (lo, hi) = self.valid_range();
        if value < lo || value > hi {
            return Err(match self {
                MetricKind::MosNisqa | MetricKind::MosDnsmos => "MOS outside [1, 5]",
                _ => "value must be non-negative",
            });
        }
        Ok(())
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error returned when parsing an unknown metric name.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric `{0}`")]
pub struct UnknownMetric(pub alloc::string::String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim();
        MetricKind::ALL
            .into_iter()
            .find(|k| {
                k.name().eq_ignore_ascii_case(norm)
                    || (norm.eq_ignore_ascii_case("SI-SDR") && *k == MetricKind::SiSdr)
            })
            .ok_or_else(|| UnknownMetric(norm.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t30_is_the_only_down_metric_among_quality_and_acoustic_kinds() {
        let quality = [
            MetricKind::Pesq,
            MetricKind::Snr,
            MetricKind::SiSdr,
            MetricKind::T30,
            MetricKind::C50,
        ];
        let down: alloc::vec::Vec<_> = quality
            .into_iter()
            .filter(|k| k.direction() == Direction::Down)
            .collect();
        assert_eq!(down, [MetricKind::T30]);
    }

    #[test]
    fn names_round_trip() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.name().parse::<MetricKind>().unwrap(), kind);
        }
        assert_eq!("si-sdr".parse::<MetricKind>().unwrap(), MetricKind::SiSdr);
        assert!("LOUDNESS".parse::<MetricKind>().is_err());
    }

    #[test]
    fn range_checks() {
        assert!(MetricKind::MosNisqa.check(3.2).is_ok());
        assert!(MetricKind::MosNisqa.check(5.7).is_err());
        assert!(MetricKind::T30.check(0.0).is_err());
        assert!(MetricKind::SiSdr.check(-4.0).is_ok());
        assert!(MetricKind::Snr.check(f64::NAN).is_err());
    }
}
