//! Blind SNR estimation by waveform amplitude distribution analysis.
//!
//! Speech amplitudes are modelled as gamma distributed (shape 0.4) and noise
//! as Gaussian. The statistic `ln(mean|x|) - mean(ln|x|)` of the mixture is
//! monotone in SNR, and is mapped back to dB through a tabulated curve with
//! linear interpolation.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Lowest tabulated SNR, dB.
pub const MIN_DB: f64 = -20.0;
/// Highest tabulated SNR, dB.
pub const MAX_DB: f64 = 100.0;
/// Minimum accepted input length.
pub const MIN_DURATION_S: f64 = 0.5;

const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Statistic value for SNR = -20, -19, ..., 100 dB. Mirrors
/// `data/wada_gamma_table.txt`.
pub const GAMMA_TABLE: [f64; 121] = [
    0.40974774, 0.40986926, 0.40998566, 0.40969089, 0.40986186, 0.40999006, 0.41027138, 0.41052627,
    0.41101024, 0.41143264, 0.41231718, 0.41337272, 0.41526426, 0.4178192, 0.42077252, 0.42452799,
    0.42918886, 0.43510373, 0.44234195, 0.45161485, 0.46221153, 0.47491647, 0.48883809, 0.50509236,
    0.52353709, 0.54372088, 0.56532427, 0.58847532, 0.61346212, 0.63954496, 0.66750818, 0.69583724,
    0.72454762, 0.75414799, 0.78323148, 0.81240985, 0.84219775, 0.87166406, 0.90030504, 0.92880418,
    0.95655449, 0.9835349, 1.01047155, 1.0362095, 1.06136425, 1.08579312, 1.1094819, 1.13277995,
    1.15472826, 1.17627308, 1.19703503, 1.21671694, 1.23535898, 1.25364313, 1.27103891, 1.28718029,
    1.30302865, 1.31839527, 1.33294817, 1.34700935, 1.3605727, 1.37345513, 1.38577122, 1.39733504,
    1.40856397, 1.41959619, 1.42983624, 1.43958467, 1.44902176, 1.45804831, 1.46658637, 1.47446645,
    1.48222987, 1.48991096, 1.49681709, 1.50335106, 1.50949167, 1.51567326, 1.52115092, 1.5262809,
    1.53119404, 1.53569018, 1.54017272, 1.54465839, 1.54868304, 1.55276106, 1.55625689, 1.55953002,
    1.56266637, 1.56586117, 1.5685766, 1.57139218, 1.57385442, 1.5762071, 1.57840524, 1.58056262,
    1.58243286, 1.5840658, 1.5858038, 1.58731775, 1.58863734, 1.58995339, 1.59121102, 1.59235072,
    1.59342612, 1.59439969, 1.59527755, 1.59611714, 1.5968814, 1.59763298, 1.59828838, 1.59887998,
    1.59944569, 1.59993766, 1.60040232, 1.60083357, 1.60123611, 1.60157498, 1.60190766, 1.60221744,
    1.60250254,
];

/// The amplitude-distribution statistic of `samples`.
///
/// Samples are normalised by their peak before flooring, so the value is
/// invariant to positive scaling of the input.
pub fn amplitude_statistic(samples: &[f64]) -> Result<f64> {
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Silent("wada_snr"));
    }
    let n = samples.len() as f64;
    let mut abs_sum = crate::stats::KahanSum::new();
    let mut log_sum = crate::stats::KahanSum::new();
    for &x in samples {
        let a = (x.abs() / peak).max(AMPLITUDE_FLOOR);
        abs_sum.add(a);
        log_sum.add(a.ln());
    }
    let mean_abs = (abs_sum.total() / n).max(AMPLITUDE_FLOOR);
    Ok(mean_abs.ln() - log_sum.total() / n)
}

/// Maps a statistic value to dB through [`GAMMA_TABLE`], clamped to
/// `[MIN_DB, MAX_DB]`.
pub fn statistic_to_db(g: f64) -> f64 {
    // Highest table entry strictly below g; the low end of the table is not
    // perfectly monotone, so scan rather than bisect.
    let Some(idx) = GAMMA_TABLE.iter().rposition(|&t| t < g) else {
        return MIN_DB;
    };
    if idx == GAMMA_TABLE.len() - 1 {
        return MAX_DB;
    }
    let (lo, hi) = (GAMMA_TABLE[idx], GAMMA_TABLE[idx + 1]);
    let db = MIN_DB + idx as f64 + (g - lo) / (hi - lo);
    db.clamp(MIN_DB, MAX_DB)
}

/// WADA-SNR estimate of a mono buffer, dB.
pub fn wada_snr(samples: &[f64], sample_rate: u32) -> Result<f64> {
    let needed = (MIN_DURATION_S * sample_rate as f64).ceil() as usize;
    if samples.len() < needed {
        return Err(Error::TooShort {
            what: "wada_snr input",
            needed,
            got: samples.len(),
        });
    }
    Ok(statistic_to_db(amplitude_statistic(samples)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_matches_data_file() {
        let file = include_str!("../../data/wada_gamma_table.txt");
        let parsed: Vec<f64> = file
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(parsed.as_slice(), GAMMA_TABLE.as_slice());
    }

    #[test]
    fn lookup_hits_table_nodes_and_clamps() {
        assert_eq!(statistic_to_db(GAMMA_TABLE[30] + 1e-12).round(), 10.0);
        assert_eq!(statistic_to_db(0.0), MIN_DB);
        assert_eq!(statistic_to_db(10.0), MAX_DB);
        let mid = 0.5 * (GAMMA_TABLE[40] + GAMMA_TABLE[41]);
        assert!((statistic_to_db(mid) - 20.5).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean = synth::speech_like(2.0, 16_000, 130.0, 0.0, 0.0, &mut rng);
        let half: Vec<f64> = clean.iter().map(|x| 0.5 * x).collect();
        let a = wada_snr(&clean, 16_000).unwrap();
        let b = wada_snr(&half, 16_000).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn white_noise_reads_near_the_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = synth::white_noise(16_000, &mut rng);
        let est = wada_snr(&noise, 16_000).unwrap();
        assert!(est <= 0.0, "white noise estimated at {est} dB");
    }

    #[test]
    fn ten_db_mixture_lands_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clean = synth::speech_like(3.0, 16_000, 120.0, 0.0, 0.0, &mut rng);
        let noise = synth::white_noise(clean.len(), &mut rng);
        let mix = synth::mix_at_snr(&clean, &noise, 10.0).unwrap();
        let est = wada_snr(&mix.samples, 16_000).unwrap();
        assert!((7.0..=13.0).contains(&est), "estimate {est}");
    }

    #[test]
    fn errors_on_silence_and_short_input() {
        assert!(matches!(
            wada_snr(&vec![0.0; 16_000], 16_000),
            Err(Error::Silent(_))
        ));
        assert!(matches!(
            wada_snr(&vec![0.1; 100], 16_000),
            Err(Error::TooShort { .. })
        ));
    }
}
