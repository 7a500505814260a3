//! Synthetic material with analytically known ground truth, and the
//! reference (intrusive) measurements used as oracles: power-ratio SNR,
//! SI-SDR and Schroeder-integrated T30 / C50.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSnapshot, Utterance};
use crate::dsp::fft_convolve;
use crate::metric::MetricKind;
use crate::sidecar::{MetricTable, TimestampTable, WordStamp};
use crate::stats::{self, KahanSum};
use crate::{Error, Result};

/// `ln(1000)`: amplitude decay constant giving -60 dB of energy at `t60`.
pub const DECAY_LN: f64 = 6.907_755_278_982_137;
/// Cap applied to infinite dB results (C50 with no late energy, SI-SDR of a
/// perfect estimate).
pub const DB_CAP: f64 = 100.0;

/// Mean square.
pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    stats::sum(x.iter().map(|v| v * v)) / x.len() as f64
}

/// Sine of amplitude 0.5.
pub fn tone(freq_hz: f64, duration_s: f64, sample_rate: u32) -> Vec<f64> {
    vibrato_tone(freq_hz, 0.0, 0.0, duration_s, sample_rate)
}

/// Instantaneous frequency of [`vibrato_tone`] at time `t`.
pub fn instantaneous_f0(f0_hz: f64, depth_hz: f64, rate_hz: f64, t: f64) -> f64 {
    f0_hz + depth_hz * (2.0 * PI * rate_hz * t).sin()
}

/// Sine whose frequency is `f0 + depth * sin(2π rate t)`, amplitude 0.5.
pub fn vibrato_tone(
    f0_hz: f64,
    depth_hz: f64,
    rate_hz: f64,
    duration_s: f64,
    sample_rate: u32,
) -> Vec<f64> {
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let mut phase = 2.0 * PI * f0_hz * t;
            if depth_hz != 0.0 && rate_hz > 0.0 {
                phase += depth_hz / rate_hz * (1.0 - (2.0 * PI * rate_hz * t).cos());
            }
            0.5 * phase.sin()
        })
        .collect()
}

pub fn white_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn resonate(x: &[f64], centre_hz: f64, bandwidth_hz: f64, sr: f64) -> Vec<f64> {
    let r = (-PI * bandwidth_hz / sr).exp();
    let theta = 2.0 * PI * centre_hz / sr;
    let (a1, a2) = (2.0 * r * theta.cos(), -r * r);
    let mut y = vec![0.0; x.len()];
    let (mut y1, mut y2) = (0.0, 0.0);
    for (out, &v) in y.iter_mut().zip(x) {
        let cur = (1.0 - r) * v + a1 * y1 + a2 * y2;
        *out = cur;
        y2 = y1;
        y1 = cur;
    }
    y
}

/// Formant bandwidths as multiples of F0; keeps the amplitude distribution
/// roughly independent of pitch.
const FORMANTS: [(f64, f64, f64); 3] =
    [(700.0, 1.04, 1.0), (1220.0, 0.56, 0.6), (2600.0, 1.28, 0.3)];

/// Speech-like material: a glottal pulse train (optionally with vibrato)
/// through three formant resonators, shaped by raised-cosine syllables of
/// 120-300 ms with log-uniform amplitudes in [0.3, 1]. Its amplitude
/// distribution is close enough to the gamma model for WADA-SNR to hold.
/// Peak-normalised to 0.5.
pub fn speech_like<R: Rng + ?Sized>(
    duration_s: f64,
    sample_rate: u32,
    f0_hz: f64,
    vibrato_hz: f64,
    vibrato_depth_hz: f64,
    rng: &mut R,
) -> Vec<f64> {
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    let mut pulses = vec![0.0; n];
    let mut phase = 0.0;
    for (i, p) in pulses.iter_mut().enumerate() {
        let t = i as f64 / sr;
        phase += instantaneous_f0(f0_hz, vibrato_depth_hz, vibrato_hz, t) / sr;
        if phase >= 1.0 {
            phase -= 1.0;
            *p = 1.0;
        }
    }
    let mut voiced = vec![0.0; n];
    for (centre, bw_ratio, gain) in FORMANTS {
        for (v, r) in voiced
            .iter_mut()
            .zip(resonate(&pulses, centre, bw_ratio * f0_hz, sr))
        {
            *v += gain * r;
        }
    }
    let mut pos = 0;
    let ln_lo = 0.3f64.ln();
    while pos < n {
        let len = ((rng.random_range(0.12..0.30)) * sr) as usize;
        let amp = (rng.random_range(ln_lo..0.0)).exp();
        for k in 0..len.min(n - pos) {
            let w = (PI * k as f64 / len as f64).sin();
            voiced[pos + k] *= amp * w * w;
        }
        pos += len;
    }
    let peak = voiced.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        voiced.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    voiced
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub samples: Vec<f64>,
    /// Factor applied to the (looped/truncated) noise.
    pub noise_scale: f64,
}

/// Adds `noise`, looped or truncated to `clean.len()`, scaled so that
/// `10 log10(P_clean / P_noise) = target_snr_db` with power as mean square.
pub fn mix_at_snr(clean: &[f64], noise: &[f64], target_snr_db: f64) -> Result<Mixture> {
    if !target_snr_db.is_finite() {
        return Err(Error::invalid("target SNR must be finite"));
    }
    if clean.is_empty() || noise.is_empty() {
        return Err(Error::TooShort {
            what: "mix_at_snr input",
            needed: 1,
            got: 0,
        });
    }
    let fitted: Vec<f64> = noise.iter().copied().cycle().take(clean.len()).collect();
    let (pc, pn) = (power(clean), power(&fitted));
    if !(pc > 0.0) {
        return Err(Error::Silent("mix_at_snr clean"));
    }
    if !(pn > 0.0) {
        return Err(Error::Silent("mix_at_snr noise"));
    }
    let noise_scale = (pc / (pn * 10f64.powf(target_snr_db / 10.0))).sqrt();
    let samples = clean
        .iter()
        .zip(&fitted)
        .map(|(c, n)| c + noise_scale * n)
        .collect();
    Ok(Mixture {
        samples,
        noise_scale,
    })
}

/// Exponentially decaying random-sign impulse response: `h[0] = 1`, then
/// `±exp(-6.9078 t / t60)`. Unit-magnitude signs make the energy envelope
/// exactly `exp(-13.8155 t / t60)`.
pub fn exp_rir(t60_s: f64, duration_s: f64, sample_rate: u32, seed: u64) -> Result<Vec<f64>> {
    if !(t60_s > 0.0) {
        return Err(Error::invalid("t60 must be positive"));
    }
    let sr = sample_rate as f64;
    let n = ((duration_s * sr).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let env = (-DECAY_LN * i as f64 / (sr * t60_s)).exp();
            if i == 0 {
                1.0
            } else if rng.random::<bool>() {
                env
            } else {
                -env
            }
        })
        .collect())
}

/// Backward-integrated energy decay curve in dB relative to total energy.
pub fn schroeder_curve(rir: &[f64]) -> Result<Vec<f64>> {
    let mut edc = vec![0.0; rir.len()];
    let mut acc = KahanSum::new();
    for i in (0..rir.len()).rev() {
        acc.add(rir[i] * rir[i]);
        edc[i] = acc.total();
    }
    let total = edc.first().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Err(Error::Silent("impulse response"));
    }
    Ok(edc
        .iter()
        .map(|e| {
            if *e > 0.0 {
                10.0 * (e / total).log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect())
}

/// T30: `-60 / slope` of a least-squares line through the Schroeder curve
/// between -5 and -35 dB.
pub fn schroeder_t30(rir: &[f64], sample_rate: u32) -> Result<f64> {
    let curve = schroeder_curve(rir)?;
    let start = curve
        .iter()
        .position(|&d| d <= -5.0)
        .ok_or(Error::DecayRangeNotReached(-5))?;
    let end = curve
        .iter()
        .position(|&d| d <= -35.0)
        .ok_or(Error::DecayRangeNotReached(-35))?;
    if end <= start + 1 {
        return Err(Error::Undefined(
            "decay between -5 and -35 dB spans fewer than two samples",
        ));
    }
    let sr = sample_rate as f64;
    let n = (end - start + 1) as f64;
    let (mut st, mut sy) = (KahanSum::new(), KahanSum::new());
    for (i, d) in curve.iter().enumerate().take(end + 1).skip(start) {
        st.add(i as f64 / sr);
        sy.add(*d);
    }
    let (mt, my) = (st.total() / n, sy.total() / n);
    let (mut sxy, mut sxx) = (KahanSum::new(), KahanSum::new());
    for (i, d) in curve.iter().enumerate().take(end + 1).skip(start) {
        let dt = i as f64 / sr - mt;
        sxy.add(dt * (d - my));
        sxx.add(dt * dt);
    }
    let slope = sxy.total() / sxx.total();
    if !(slope < 0.0) {
        return Err(Error::Undefined("energy decay curve is not decreasing"));
    }
    Ok(-60.0 / slope)
}

/// C50 = `10 log10(E[0, 50 ms] / E(50 ms, end])`, capped at ±100 dB.
pub fn c50(rir: &[f64], sample_rate: u32) -> Result<f64> {
    let needed = (0.06 * sample_rate as f64).ceil() as usize;
    if rir.len() < needed {
        return Err(Error::TooShort {
            what: "c50 impulse response",
            needed,
            got: rir.len(),
        });
    }
    let split = (0.05 * sample_rate as f64).round() as usize;
    let early = stats::sum(rir[..=split].iter().map(|v| v * v));
    let late = stats::sum(rir[split + 1..].iter().map(|v| v * v));
    if !(early > 0.0) && !(late > 0.0) {
        return Err(Error::Silent("impulse response"));
    }
    if !(late > 0.0) {
        return Ok(DB_CAP);
    }
    if !(early > 0.0) {
        return Ok(-DB_CAP);
    }
    Ok((10.0 * (early / late).log10()).clamp(-DB_CAP, DB_CAP))
}

/// C50 of a continuous exponential energy envelope with decay `t60`.
pub fn c50_closed_form(t60_s: f64) -> f64 {
    10.0 * ((2.0 * DECAY_LN * 0.05 / t60_s).exp() - 1.0).log10()
}

/// Scale-invariant SDR of `estimate` against `reference`, capped at ±100 dB.
pub fn true_si_sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid("si_sdr inputs must have equal length"));
    }
    let rr = stats::sum(reference.iter().map(|r| r * r));
    if !(rr > 0.0) {
        return Err(Error::Silent("si_sdr reference"));
    }
    let alpha = stats::sum(reference.iter().zip(estimate).map(|(r, e)| r * e)) / rr;
    let target = alpha * alpha * rr;
    let residual = stats::sum(reference.iter().zip(estimate).map(|(r, e)| {
        let d = alpha * r - e;
        d * d
    }));
    if !(residual > 0.0) {
        return Ok(DB_CAP);
    }
    if !(target > 0.0) {
        return Ok(-DB_CAP);
    }
    Ok((10.0 * (target / residual).log10()).clamp(-DB_CAP, DB_CAP))
}

/// Synthetic MOS: `clamp(1 + 4 (snr + 5) / 35, 1, 5)`, strictly increasing
/// in SNR on (-5, 30) dB.
pub fn mos_proxy(snr_db: f64) -> f64 {
    (1.0 + 4.0 * (snr_db + 5.0) / 35.0).clamp(1.0, 5.0)
}

/// A second MOS predictor with a lower median and narrower spread, standing
/// in for a more conservative model.
pub fn mos_proxy_compressed(snr_db: f64) -> f64 {
    (1.5 + 2.5 * (snr_db + 5.0) / 35.0).clamp(1.0, 5.0)
}

/// Synthetic PESQ on the 1-4.5 scale, increasing in SNR.
pub fn pesq_proxy(snr_db: f64) -> f64 {
    (1.0 + 3.5 * (snr_db + 5.0) / 35.0).clamp(1.0, 4.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub target_snr_db: f64,
    /// 0 disables reverberation.
    pub t60_s: f64,
    pub f0_hz: f64,
    pub vibrato_hz: f64,
    pub vibrato_depth_hz: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.target_snr_db.is_finite() {
            return Err(Error::invalid("target_snr_db must be finite"));
        }
        if !(self.t60_s >= 0.0) {
            return Err(Error::invalid("t60_s must be >= 0"));
        }
        if !(self.f0_hz > 0.0) {
            return Err(Error::invalid("f0_hz must be positive"));
        }
        Ok(())
    }
}

/// Timing of generated utterances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusLayout {
    pub sample_rate: u32,
    pub duration_s: f64,
    /// Nominal speaking rate is drawn uniformly from this range (words/s).
    pub words_per_second: (f64, f64),
    /// Words per phrase; phrases are separated by longer pauses.
    pub phrase_words: (u32, u32),
    pub phrase_pause_s: (f64, f64),
}

impl Default for CorpusLayout {
    fn default() -> Self {
        CorpusLayout {
            sample_rate: 16_000,
            duration_s: 6.0,
            words_per_second: (1.5, 5.5),
            phrase_words: (4, 9),
            phrase_pause_s: (0.4, 0.9),
        }
    }
}

/// A simulated enhancement stage: raises SNR by a fixed gain and shortens the
/// reverberation tail. Applied to the same clean material and noise
/// realisation as the raw variant so outputs stay time-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub label: String,
    pub snr_gain_db: f64,
    pub t60_scale: f64,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub snapshot: CorpusSnapshot,
    /// Degraded audio per utterance, in snapshot order.
    pub audio: Vec<Vec<f64>>,
    pub timestamps: TimestampTable,
    /// Ground truth: SNR, SI_SDR, T30, C50, F0_STD, PESQ, MOS_NISQA,
    /// MOS_DNSMOS (T30/C50 omitted for dry utterances).
    pub truth: Vec<MetricTable>,
}

const NOISE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const RIR_STREAM: u64 = 0xc2b2_ae3d_27d4_eb4f;

fn word_layout(layout: &CorpusLayout, rng: &mut ChaCha8Rng) -> Vec<WordStamp> {
    let wps = rng.random_range(layout.words_per_second.0..=layout.words_per_second.1);
    let period = 1.0 / wps;
    let mut words = Vec::new();
    let mut t = rng.random_range(0.2..0.5);
    let end_limit = layout.duration_s - 0.3;
    'outer: loop {
        let phrase = rng.random_range(layout.phrase_words.0..=layout.phrase_words.1);
        for _ in 0..phrase {
            let len = period * rng.random_range(0.6..0.85);
            if t + len > end_limit {
                break 'outer;
            }
            words.push(WordStamp {
                word: format!("w{}", words.len()),
                start: t,
                end: t + len,
            });
            t += period;
        }
        t += rng.random_range(layout.phrase_pause_s.0..=layout.phrase_pause_s.1);
    }
    words
}

struct Generated {
    degraded: Vec<f64>,
    words: Vec<WordStamp>,
    truth: BTreeMap<MetricKind, f64>,
}

fn generate_one(
    spec: &DegradationSpec,
    layout: &CorpusLayout,
    snr_gain_db: f64,
    t60_scale: f64,
) -> Result<Generated> {
    spec.validate()?;
    let sr = layout.sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = word_layout(layout, &mut rng);
    let mut clean = speech_like(
        layout.duration_s,
        layout.sample_rate,
        spec.f0_hz,
        spec.vibrato_hz,
        spec.vibrato_depth_hz,
        &mut rng,
    );
    // Gate to word extents with 10 ms raised-cosine ramps.
    let ramp = (0.01 * sr) as usize;
    let mut gate = vec![0.0; clean.len()];
    for w in &words {
        let (a, b) = (
            (w.start * sr) as usize,
            ((w.end * sr) as usize).min(gate.len()),
        );
        for (k, g) in gate[a..b].iter_mut().enumerate() {
            let edge = k.min(b - a - 1 - k);
            *g = if edge < ramp {
                let x = (PI * 0.5 * edge as f64 / ramp as f64).sin();
                x * x
            } else {
                1.0
            };
        }
    }
    clean.iter_mut().zip(&gate).for_each(|(c, g)| *c *= g);

    let mut truth = BTreeMap::new();
    let t60 = spec.t60_s * t60_scale;
    let reverberant = if t60 > 0.0 {
        let rir = exp_rir(
            t60,
            (1.5 * t60).max(0.1),
            layout.sample_rate,
            spec.seed ^ RIR_STREAM,
        )?;
        truth.insert(MetricKind::T30, schroeder_t30(&rir, layout.sample_rate)?);
        truth.insert(MetricKind::C50, c50(&rir, layout.sample_rate)?);
        let energy = stats::sum(rir.iter().map(|v| v * v));
        let mut wet = fft_convolve(&clean, &rir);
        wet.truncate(clean.len());
        let norm = energy.sqrt();
        wet.iter_mut().for_each(|v| *v /= norm);
        wet
    } else {
        clean
    };

    let snr = spec.target_snr_db + snr_gain_db;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ NOISE_STREAM);
    let noise = white_noise(reverberant.len(), &mut noise_rng);
    let mix = mix_at_snr(&reverberant, &noise, snr)?;
    let mut degraded = mix.samples;
    let peak = degraded.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        degraded.iter_mut().for_each(|v| *v *= 0.99 / peak);
    }
    truth.insert(MetricKind::Snr, snr);
    truth.insert(MetricKind::SiSdr, true_si_sdr(&reverberant, &degraded)?);
    truth.insert(MetricKind::Pesq, pesq_proxy(snr));
    truth.insert(MetricKind::MosNisqa, mos_proxy(snr));
    truth.insert(MetricKind::MosDnsmos, mos_proxy_compressed(snr));

    // F0 dispersion of the generator at 10 ms frame centres inside words.
    let f0s: Vec<f64> = (0..)
        .map(|i| 0.02 + 0.01 * i as f64)
        .take_while(|t| *t < layout.duration_s)
        .filter(|t| words.iter().any(|w| *t >= w.start && *t < w.end))
        .map(|t| instantaneous_f0(spec.f0_hz, spec.vibrato_depth_hz, spec.vibrato_hz, t))
        .collect();
    if f0s.len() >= 2 {
        truth.insert(
            MetricKind::F0Std,
            stats::population_std(&f0s).unwrap_or(0.0),
        );
    }
    Ok(Generated {
        degraded,
        words,
        truth,
    })
}

/// One utterance per spec, id `syn0000`, `syn0001`, ...; ids equal source
/// ids. With `enhancement` the same clean material is re-rendered at the
/// enhanced operating point.
pub fn make_corpus(
    specs: &[DegradationSpec],
    layout: &CorpusLayout,
    enhancement: Option<&Enhancement>,
) -> Result<SynthCorpus> {
    if specs.is_empty() {
        return Err(Error::invalid("synthetic corpus needs at least one spec"));
    }
    if !(layout.duration_s >= 1.0) || layout.sample_rate == 0 {
        return Err(Error::invalid(
            "layout needs duration >= 1 s and a positive sample rate",
        ));
    }
    let (gain, scale, name) = match enhancement {
        Some(e) => (e.snr_gain_db, e.t60_scale, e.label.as_str()),
        None => (0.0, 1.0, "none"),
    };
    let mut utterances = Vec::with_capacity(specs.len());
    let mut audio = Vec::with_capacity(specs.len());
    let mut stamps = Vec::with_capacity(specs.len());
    let mut truth: BTreeMap<MetricKind, Vec<(Option<usize>, String, f64)>> = BTreeMap::new();
    for (i, spec) in specs.iter().enumerate() {
        let id = format!("syn{i:04}");
        let generated = generate_one(spec, layout, gain, scale)?;
        let dur = generated.degraded.len() as f64 / layout.sample_rate as f64;
        utterances.push(Utterance::new(
            id.clone(),
            id.clone(),
            0.0,
            dur,
            layout.sample_rate,
        )?);
        for (kind, value) in generated.truth {
            truth
                .entry(kind)
                .or_default()
                .push((None, id.clone(), value));
        }
        stamps.push((None, id, generated.words));
        audio.push(generated.degraded);
    }
    let truth = truth
        .into_iter()
        .map(|(kind, rows)| MetricTable::from_rows(kind, rows))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthCorpus {
        snapshot: CorpusSnapshot::new(name, utterances)?,
        audio,
        timestamps: TimestampTable::from_rows(stamps)?,
        truth,
    })
}
