//! `ingest`: decode each variant's manifest into a snapshot and merge the
//! sidecars configured for the ingest stage.

use super::{merge_sidecars, Context};
use crate::config::{SidecarStage, Stage};
use crate::error::CliResult;
use crate::manifest::{self, IngestOptions};
use crate::snapshot_io;

pub fn run(ctx: &Context) -> CliResult<()> {
    let variants = ctx.variants()?;
    let options = IngestOptions {
        sample_rate: ctx.config.sample_rate,
        error_limit: ctx.config.error_limit,
    };
    for v in variants {
        let path = ctx.resolve(&v.manifest);
        ctx.require(&path, &format!("manifest of `{}`", v.name))?;
    }
    ctx.out_dir("snapshots")?;
    for v in variants {
        let ingested = manifest::ingest_manifest(&ctx.resolve(&v.manifest), &v.name, options)
            .map_err(anyhow::Error::from)?;
        for skipped in &ingested.skipped {
            log::warn!("{}: skipped {skipped}", v.name);
        }
        if ingested.snapshot.is_empty() {
            log::warn!("{}: manifest has no utterances", v.name);
        }
        let snapshot = merge_sidecars(
            ctx,
            ingested.snapshot,
            &v.name,
            &ctx.config.sidecars,
            SidecarStage::Ingest,
        )?;
        snapshot_io::write(&ctx.snapshot_path(&v.name, Stage::Ingested), &snapshot)?;
    }
    Ok(())
}
