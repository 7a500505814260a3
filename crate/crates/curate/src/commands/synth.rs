//! `synth`: a synthetic corpus with known ground truth, written as WAV files,
//! manifests, word timestamps and truth sidecars under `<out>/synth/`.
//!
//! Layout:
//! - `audio/<variant>/<id>.wav`
//! - `manifest_<variant>.jsonl`
//! - `truth/<variant>/<METRIC>.csv`
//! - `timestamps.jsonl`, `specs.csv`

use std::fs;

use anyhow::Context as _;
use curate_core::synth::{self, DegradationSpec, Enhancement, SynthCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{runtime, Context};
use crate::config::{SynthSection, RAW_VARIANT};
use crate::error::CliResult;
use crate::manifest::{self, ManifestRow};
use crate::{audio, sidecar_io};

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One spec per source. SNR is stratified over its range in id order; the
/// other parameters are uniform draws.
pub fn specs(section: &SynthSection, seed: u64) -> Vec<DegradationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = section.sources;
    let (lo, hi) = section.snr_db;
    (0..n)
        .map(|i| {
            let frac = (i as f64 + rng.random::<f64>()) / n as f64;
            DegradationSpec {
                target_snr_db: lo + (hi - lo) * frac,
                t60_s: draw(&mut rng, section.t60_s),
                f0_hz: draw(&mut rng, section.f0_hz),
                vibrato_hz: draw(&mut rng, section.vibrato_hz),
                vibrato_depth_hz: draw(&mut rng, section.vibrato_depth_hz),
                seed: rng.random(),
            }
        })
        .collect()
}

fn write_variant(ctx: &Context, name: &str, corpus: &SynthCorpus) -> CliResult<()> {
    let root = ctx.out_dir("synth")?;
    let audio_dir = ctx.out_dir(&format!("synth/audio/{name}"))?;
    let truth_dir = ctx.out_dir(&format!("synth/truth/{name}"))?;
    let sr = ctx.config.sample_rate;
    let utts = corpus.snapshot.utterances();
    utts.par_iter()
        .zip(&corpus.audio)
        .try_for_each(|(u, samples)| {
            audio::write_wav(&audio_dir.join(format!("{}.wav", u.id)), samples, sr)
        })
        .map_err(runtime)?;
    let rows: Vec<ManifestRow> = utts
        .iter()
        .map(|u| ManifestRow {
            id: u.id.clone(),
            path: format!("audio/{name}/{}.wav", u.id),
            speaker_id: None,
            start_s: None,
            end_s: None,
        })
        .collect();
    manifest::write_manifest(&root.join(format!("manifest_{name}.jsonl")), &rows)
        .context("writing synthetic manifest")?;
    for table in &corpus.truth {
        let rows: Vec<(String, Option<f64>)> = utts
            .iter()
            .map(|u| (u.id.clone(), table.get(&u.id)))
            .collect();
        sidecar_io::write_metric(&truth_dir.join(format!("{}.csv", table.metric)), &rows)?;
    }
    Ok(())
}

fn write_specs(ctx: &Context, specs: &[DegradationSpec]) -> CliResult<()> {
    let path = ctx.out.join("synth/specs.csv");
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "id",
        "target_snr_db",
        "t60_s",
        "f0_hz",
        "vibrato_hz",
        "vibrato_depth_hz",
        "seed",
    ])
    .map_err(runtime)?;
    for (i, s) in specs.iter().enumerate() {
        w.write_record([
            format!("syn{i:04}"),
            s.target_snr_db.to_string(),
            s.t60_s.to_string(),
            s.f0_hz.to_string(),
            s.vibrato_hz.to_string(),
            s.vibrato_depth_hz.to_string(),
            s.seed.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(())
}

pub fn run(ctx: &Context) -> CliResult<()> {
    let section = &ctx.config.synth;
    let specs = specs(section, ctx.seed);
    let layout = section.layout(ctx.config.sample_rate);
    let mut variants: Vec<(String, Option<&Enhancement>)> = vec![(RAW_VARIANT.to_string(), None)];
    variants.extend(
        section
            .enhancements
            .iter()
            .map(|e| (e.label.clone(), Some(e))),
    );
    let corpora: Vec<SynthCorpus> = variants
        .par_iter()
        .map(|(_, enh)| synth::make_corpus(&specs, &layout, *enh))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    fs::create_dir_all(ctx.out.join("synth")).context("creating output directory")?;
    for ((name, _), corpus) in variants.iter().zip(&corpora) {
        write_variant(ctx, name, corpus)?;
    }
    sidecar_io::write_timestamps(
        &ctx.out.join("synth/timestamps.jsonl"),
        &corpora[0].timestamps,
    )?;
    write_specs(ctx, &specs)?;
    log::info!(
        "synth: {} sources x {} variants",
        specs.len(),
        variants.len()
    );
    Ok(())
}
