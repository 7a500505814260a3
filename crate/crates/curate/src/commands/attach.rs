//! `attach`: merge native metric files and configured sidecars into each
//! variant's snapshot, producing `snapshots/<variant>.attached.jsonl`.

use curate_core::MetricKind;

use super::{merge_sidecars, Context};
use crate::config::{KeyKind, PolicyKind, SidecarSpec, SidecarStage, Stage};
use crate::error::CliResult;
use crate::snapshot_io;

const NATIVE: [MetricKind; 3] = [MetricKind::Snr, MetricKind::F0Std, MetricKind::Mcd];

pub fn run(ctx: &Context, stage: Option<Stage>, extra: &[SidecarSpec]) -> CliResult<()> {
    let stage = stage.unwrap_or(ctx.config.attach.stage);
    let variants = ctx.variants()?;
    ctx.out_dir("snapshots")?;
    for v in variants {
        let snapshot = ctx.load_stage(&v.name, stage)?;
        let native: Vec<SidecarSpec> = NATIVE
            .iter()
            .map(|&metric| SidecarSpec {
                metric,
                path: ctx
                    .out
                    .join("metrics")
                    .join(&v.name)
                    .join(format!("{metric}.csv"))
                    .to_string_lossy()
                    .into_owned(),
                variants: None,
                key: KeyKind::Id,
                policy: ctx.config.attach.policy,
                stage: SidecarStage::Attach,
            })
            .filter(|s| std::path::Path::new(&s.path).is_file())
            .collect();
        if native.is_empty() {
            log::warn!(
                "{}: no native metric files; run `metrics` first to attach them",
                v.name
            );
        }
        let mut specs = native;
        specs.extend(ctx.config.sidecars.iter().cloned());
        specs.extend(extra.iter().cloned());
        let merged = merge_sidecars(ctx, snapshot, &v.name, &specs, SidecarStage::Attach)?;
        snapshot_io::write(&ctx.snapshot_path(&v.name, Stage::Attached), &merged)?;
    }
    Ok(())
}

/// Parses `METRIC=PATH` from the command line.
pub fn parse_sidecar_flag(text: &str, partial: bool, key: KeyKind) -> Result<SidecarSpec, String> {
    let (metric, path) = text
        .split_once('=')
        .ok_or_else(|| format!("expected METRIC=PATH, got `{text}`"))?;
    let metric: MetricKind = metric.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(SidecarSpec {
        metric,
        path: path.to_string(),
        variants: None,
        key,
        policy: if partial {
            PolicyKind::Partial
        } else {
            PolicyKind::Strict
        },
        stage: SidecarStage::Attach,
    })
}
