//! `segment`: speech-rate classification, per-class VAD tuning, detection
//! and length-targeted concatenation.
//!
//! The raw variant is segmented; every other variant receives the same
//! extents, so utterance ids stay aligned across variants. Outputs:
//! `snapshots/<variant>.segmented.jsonl`, `vad/<class>.txt`,
//! `vad/trials_<class>.csv`, `vad/rate_classes.csv`, `vad/segments.csv`.

use anyhow::Context as _;
use curate_core::sidecar::{TimestampTable, WordStamp};
use curate_core::sweep::check_alignment;
use curate_core::tpe::{self, ParamSpace, TpeSettings, TunedVad, VadTask};
use curate_core::vad::{self, Segment, SpeechRateClass, VadParams};
use curate_core::{CorpusSnapshot, Utterance};
use rayon::prelude::*;

use super::{decode_all, runtime, utterance_audio, Context};
use crate::config::{Stage, RAW_VARIANT};
use crate::error::CliResult;
use crate::{report, sidecar_io, snapshot_io};

struct Source<'a> {
    utt: &'a Utterance,
    samples: &'a [f64],
    words: Option<&'a [WordStamp]>,
    class: SpeechRateClass,
}

fn class_params(
    ctx: &Context,
    class_index: usize,
    tasks: &[VadTask],
) -> CliResult<Option<TunedVad>> {
    if tasks.is_empty() {
        return Ok(None);
    }
    let settings = TpeSettings {
        seed: ctx.seed.wrapping_add(class_index as u64),
        ..ctx.config.tpe
    };
    let tuned = tpe::tune_vad(
        tasks,
        &ParamSpace::vad(),
        ctx.config.segment.budget,
        &settings,
    )
    .map_err(runtime)?;
    Ok(Some(tuned))
}

fn segmented_utterances(src: &Utterance, groups: &[vad::Group]) -> CliResult<Vec<Utterance>> {
    groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let mut u = Utterance::new(
                format!("{}_{k:04}", src.id),
                &src.source_id,
                src.start_s + g.extent.start_s,
                (src.start_s + g.extent.end_s).min(src.end_s),
                src.sample_rate,
            )
            .map_err(runtime)?;
            u.path = src.path.clone();
            u.speaker_id = src.speaker_id.clone();
            Ok(u)
        })
        .collect()
}

/// Re-cuts `segmented` (ids `<raw id>_<k>`) against another variant's audio.
fn project(
    segmented: &CorpusSnapshot,
    variant: &CorpusSnapshot,
    raw: &CorpusSnapshot,
) -> CliResult<CorpusSnapshot> {
    check_alignment(raw, variant).map_err(runtime)?;
    let utts = segmented
        .utterances()
        .iter()
        .map(|s| {
            let parent = s.id.rsplit_once('_').map(|(p, _)| p).unwrap_or(&s.id);
            let v = variant
                .get(parent)
                .ok_or_else(|| anyhow::anyhow!("`{parent}` missing in {}", variant.name))?;
            let mut u = s.clone();
            u.path = v.path.clone();
            u.speaker_id = v.speaker_id.clone();
            Ok(u)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    CorpusSnapshot::new(variant.name.clone(), utts).map_err(runtime)
}

fn write_params(
    path: &std::path::Path,
    class: SpeechRateClass,
    tuned: Option<&TunedVad>,
    count: usize,
) -> CliResult<()> {
    let (header, params) = match tuned {
        Some(t) => (
            format!(
                "# {class}: tuned on {count} source(s), frame F1 {:.4}\n",
                t.f1
            ),
            t.params,
        ),
        None => (
            format!("# {class}: no timestamped sources, default parameters\n"),
            VadParams::default(),
        ),
    };
    std::fs::write(path, header + &vad::params_to_text(&params))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn run(ctx: &Context) -> CliResult<()> {
    let variants = ctx.variants()?;
    let raw = ctx.load_stage(RAW_VARIANT, Stage::Ingested)?;
    let others = variants
        .iter()
        .filter(|v| v.name != RAW_VARIANT)
        .map(|v| ctx.load_stage(&v.name, Stage::Ingested))
        .collect::<CliResult<Vec<_>>>()?;
    let timestamps = match &ctx.config.timestamps {
        Some(p) => {
            let path = ctx.resolve(p);
            ctx.require(&path, "word timestamps")?;
            sidecar_io::load_timestamps(&path)?
        }
        None => {
            log::warn!("no word timestamps configured; every source uses default VAD parameters");
            TimestampTable::default()
        }
    };
    let vad_dir = ctx.out_dir("vad")?;
    ctx.out_dir("snapshots")?;
    if raw.is_empty() {
        log::warn!("raw snapshot is empty; writing empty segmented snapshots");
    }

    let cache = decode_all([&raw], ctx.config.sample_rate)?;
    let bounds = ctx.config.segment.rate_bounds;
    let sources = raw
        .utterances()
        .iter()
        .map(|u| {
            let words = timestamps.get(&u.id);
            let class = words
                .and_then(vad::words_per_second)
                .map_or(SpeechRateClass::Normal, |w| vad::classify_rate(w, bounds));
            if words.is_none() {
                log::warn!("{}: no word timestamps; using default VAD parameters", u.id);
            }
            Ok(Source {
                utt: u,
                samples: utterance_audio(&cache, u)?,
                words,
                class,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let tuned: Vec<Option<TunedVad>> = SpeechRateClass::ALL
        .par_iter()
        .enumerate()
        .map(|(i, class)| {
            let tasks: Vec<VadTask> = sources
                .iter()
                .filter(|s| s.class == *class)
                .filter_map(|s| {
                    s.words
                        .map(|w| VadTask::new(s.samples, s.utt.sample_rate, w))
                })
                .collect();
            class_params(ctx, i, &tasks)
        })
        .collect::<CliResult<_>>()?;
    let params_of = |class: SpeechRateClass| {
        let i = SpeechRateClass::ALL
            .iter()
            .position(|c| *c == class)
            .unwrap_or(1);
        tuned[i]
            .as_ref()
            .map_or_else(VadParams::default, |t| t.params)
    };

    let target = ctx.config.segment.length;
    let results: Vec<(Vec<Segment>, Vec<Utterance>)> = sources
        .par_iter()
        .map(|s| {
            let params = if s.words.is_some() {
                params_of(s.class)
            } else {
                VadParams::default()
            };
            let detected = vad::detect(s.samples, s.utt.sample_rate, &params);
            let groups = vad::concat_to_target(&detected, &target).map_err(runtime)?;
            Ok((detected, segmented_utterances(s.utt, &groups)?))
        })
        .collect::<CliResult<_>>()?;

    let segmented = CorpusSnapshot::new(
        RAW_VARIANT,
        results
            .iter()
            .flat_map(|(_, u)| u.iter().cloned())
            .collect(),
    )
    .map_err(runtime)?;
    snapshot_io::write(
        &ctx.snapshot_path(RAW_VARIANT, Stage::Segmented),
        &segmented,
    )?;
    for other in &others {
        let projected = project(&segmented, other, &raw)?;
        snapshot_io::write(
            &ctx.snapshot_path(&other.name, Stage::Segmented),
            &projected,
        )?;
    }

    for (i, class) in SpeechRateClass::ALL.iter().enumerate() {
        let count = sources
            .iter()
            .filter(|s| s.class == *class && s.words.is_some())
            .count();
        write_params(
            &vad_dir.join(format!("{class}.txt")),
            *class,
            tuned[i].as_ref(),
            count,
        )?;
        report::write_trials(
            &vad_dir.join(format!("trials_{class}.csv")),
            tuned[i].as_ref().map_or(&[][..], |t| &t.history),
        )?;
    }
    let mut w = csv::Writer::from_path(vad_dir.join("rate_classes.csv")).map_err(runtime)?;
    w.write_record(["id", "words_per_second", "class"])
        .map_err(runtime)?;
    for s in &sources {
        let wps = s
            .words
            .and_then(vad::words_per_second)
            .map(|v| v.to_string())
            .unwrap_or_default();
        w.write_record([s.utt.id.as_str(), &wps, s.class.name()])
            .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    let mut w = csv::Writer::from_path(vad_dir.join("segments.csv")).map_err(runtime)?;
    w.write_record(["source_id", "start_s", "end_s"])
        .map_err(runtime)?;
    for (s, (detected, _)) in sources.iter().zip(&results) {
        for seg in detected {
            w.write_record([
                s.utt.source_id.clone(),
                (s.utt.start_s + seg.start_s).to_string(),
                (s.utt.start_s + seg.end_s).to_string(),
            ])
            .map_err(runtime)?;
        }
    }
    w.flush().map_err(runtime)?;
    log::info!(
        "segment: {} sources -> {} utterances",
        raw.len(),
        segmented.len()
    );
    Ok(())
}
