//! `metrics`: native per-utterance WADA-SNR, F0 std and (for processed
//! variants) MCD against the raw variant, written as sidecar files
//! `metrics/<variant>/<METRIC>.csv` plus `metrics/coverage.csv`.

use curate_core::dsp::{self, Alignment, FramePlan};
use curate_core::{CorpusSnapshot, MetricKind};
use rayon::prelude::*;

use super::{decode_all, runtime, utterance_audio, Context};
use crate::config::{AlignKind, Stage, RAW_VARIANT};
use crate::error::CliResult;
use crate::sidecar_io;

type Column = Vec<(String, Option<f64>)>;

fn mcd(reference: &[f64], processed: &[f64], sample_rate: u32, align: Alignment) -> Option<f64> {
    let plan = FramePlan::default();
    let a = dsp::mfcc(reference, sample_rate, plan).ok()?;
    let b = dsp::mfcc(processed, sample_rate, plan).ok()?;
    dsp::mcd(&a, &b, align).ok().map(|o| o.mean_db)
}

pub fn run(ctx: &Context, stage: Option<Stage>) -> CliResult<()> {
    let stage = stage.unwrap_or(ctx.config.metrics.stage);
    let variants = ctx.variants()?;
    let snapshots = variants
        .iter()
        .map(|v| ctx.load_stage(&v.name, stage))
        .collect::<CliResult<Vec<_>>>()?;
    let raw_index = variants
        .iter()
        .position(|v| v.name == RAW_VARIANT)
        .unwrap_or(0);
    let cache = decode_all(&snapshots, ctx.config.sample_rate)?;
    let yin = ctx.config.metrics.yin;
    let align = match ctx.config.metrics.mcd_alignment {
        AlignKind::None => Alignment::None,
        AlignKind::Dtw => Alignment::Dtw,
    };
    let raw: &CorpusSnapshot = &snapshots[raw_index];
    let mut coverage = Vec::new();
    for (v, snapshot) in variants.iter().zip(&snapshots) {
        let paired = v.name != RAW_VARIANT;
        let rows: Vec<(Option<f64>, Option<f64>, Option<f64>)> = snapshot
            .utterances()
            .par_iter()
            .map(|u| {
                let x = utterance_audio(&cache, u)?;
                let sr = u.sample_rate;
                let snr = dsp::wada_snr(x, sr).ok();
                let f0 = dsp::yin_f0(x, sr, &yin).and_then(|t| dsp::f0_std(&t)).ok();
                let mcd = match (paired, raw.get(&u.id)) {
                    (true, Some(r)) => mcd(utterance_audio(&cache, r)?, x, sr, align),
                    _ => None,
                };
                Ok((snr, f0, mcd))
            })
            .collect::<CliResult<_>>()?;
        let dir = ctx.out_dir(&format!("metrics/{}", v.name))?;
        let ids = snapshot.ids();
        let mut columns: Vec<(MetricKind, Column)> = vec![
            (MetricKind::Snr, Vec::new()),
            (MetricKind::F0Std, Vec::new()),
        ];
        if paired {
            columns.push((MetricKind::Mcd, Vec::new()));
        }
        for (id, (snr, f0, m)) in ids.zip(&rows) {
            let values = [*snr, *f0, *m];
            for (col, value) in columns.iter_mut().zip(values) {
                col.1.push((id.to_string(), value));
            }
        }
        for (kind, col) in &columns {
            let present = col.iter().filter(|(_, v)| v.is_some()).count();
            if present < col.len() {
                log::warn!(
                    "{}: {kind} missing for {} of {} utterance(s)",
                    v.name,
                    col.len() - present,
                    col.len()
                );
            }
            coverage.push((v.name.clone(), *kind, present, col.len()));
            sidecar_io::write_metric(&dir.join(format!("{kind}.csv")), col)?;
        }
    }
    let path = ctx.out.join("metrics/coverage.csv");
    let mut w = csv::Writer::from_path(&path).map_err(runtime)?;
    w.write_record(["variant", "metric", "computed", "total", "coverage"])
        .map_err(runtime)?;
    for (variant, kind, present, total) in coverage {
        let frac = if total == 0 {
            1.0
        } else {
            present as f64 / total as f64
        };
        w.write_record([
            variant,
            kind.to_string(),
            present.to_string(),
            total.to_string(),
            frac.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(())
}
