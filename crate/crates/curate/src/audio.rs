//! WAV decoding to mono `f64` at a working rate, and float WAV output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("{path}: {source}")]
    Wav {
        path: String,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported encoding {encoding}")]
    Unsupported { path: String, encoding: String },
    #[error("{path}: audio has no samples")]
    Empty { path: String },
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> AudioError + '_ {
    move |source| AudioError::Wav {
        path: path.display().to_string(),
        source,
    }
}

/// Encoding named by the `fmt ` chunk, for error messages about files the
/// decoder refuses.
fn describe_encoding(path: &Path) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    if bytes.get(0..4)? != b"RIFF" || bytes.get(8..12)? != b"WAVE" {
        return None;
    }
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        if id == b"fmt " {
            let body = bytes.get(pos + 8..pos + 8 + 16)?;
            let tag = u16::from_le_bytes([body[0], body[1]]);
            let bits = u16::from_le_bytes([body[14], body[15]]);
            let kind = match tag {
                1 => "integer PCM".to_string(),
                3 => "IEEE float".to_string(),
                0xfffe => "extensible".to_string(),
                t => format!("format tag {t:#06x}"),
            };
            return Some(format!("{bits}-bit {kind}"));
        }
        pos += 8 + len + (len & 1);
    }
    None
}

fn open(path: &Path) -> Result<WavReader<std::io::BufReader<std::fs::File>>, AudioError> {
    WavReader::open(path).map_err(|e| match (&e, describe_encoding(path)) {
        (hound::Error::FormatError(_) | hound::Error::Unsupported, Some(encoding)) => {
            AudioError::Unsupported {
                path: path.display().to_string(),
                encoding,
            }
        }
        _ => wav_err(path)(e),
    })
}

/// Decodes `path`, mixes channels down by their mean, resamples linearly to
/// `target_rate` and clips to `[-1, 1]`.
///
/// Integer PCM of 8 to 32 bits and 32-bit float are accepted.
pub fn read_audio(path: &Path, target_rate: u32) -> Result<Vec<f64>, AudioError> {
    let reader = open(path)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wav_err(path))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(wav_err(path))?
        }
        (format, bits) => {
            return Err(AudioError::Unsupported {
                path: path.display().to_string(),
                encoding: format!(
                    "{bits}-bit {}",
                    if format == SampleFormat::Float {
                        "IEEE float"
                    } else {
                        "integer PCM"
                    }
                ),
            })
        }
    };
    if interleaved.is_empty() {
        return Err(AudioError::Empty {
            path: path.display().to_string(),
        });
    }
    let channels = spec.channels.max(1) as usize;
    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks(channels)
            .map(|c| c.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    let mut out = resample_linear(&mono, spec.sample_rate, target_rate);
    out.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    Ok(out)
}

/// Linear interpolation onto the `to` grid; identity when the rates match.
pub fn resample_linear(x: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || x.is_empty() {
        return x.to_vec();
    }
    let n_out = ((x.len() as u128 * to as u128 + from as u128 / 2) / from as u128) as usize;
    let step = from as f64 / to as f64;
    (0..n_out)
        .map(|i| {
            let pos = i as f64 * step;
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            match (x.get(k), x.get(k + 1)) {
                (Some(a), Some(b)) => a + (b - a) * frac,
                (Some(a), None) => *a,
                _ => x[x.len() - 1],
            }
        })
        .collect()
}

/// Writes mono 32-bit float WAV.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<(), AudioError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err(path))?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(wav_err(path))?;
    }
    writer.finalize().map_err(wav_err(path))
}

/// The `[start_s, end_s)` window of a decoded buffer, clamped to its length.
pub fn slice(samples: &[f64], sample_rate: u32, start_s: f64, end_s: f64) -> &[f64] {
    let sr = sample_rate as f64;
    let a = ((start_s * sr).round().max(0.0) as usize).min(samples.len());
    let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, samples.len());
    &samples[a..b]
}
