//! One module per subcommand. Each takes a [`Context`] and writes its outputs
//! under the output directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use curate_core::sidecar::{self, MergeKey};
use curate_core::CorpusSnapshot;
use rayon::prelude::*;

use crate::config::{RunConfig, SidecarSpec, SidecarStage, Stage, Variant};
use crate::error::{CliError, CliResult};
use crate::{audio, invalid, sidecar_io, snapshot_io};

pub mod attach;
pub mod ingest;
pub mod metrics;
pub mod rank;
pub mod segment;
pub mod sweep;
pub mod synth;

/// Resolved configuration shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// Directory relative config paths resolve against.
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    /// `out` and `seed` override the file's values when given.
    pub fn new(config: RunConfig, base: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        let out = out.unwrap_or_else(|| base.join(&config.out_dir));
        let seed = seed.unwrap_or(config.seed);
        Context {
            config,
            base,
            out,
            seed,
        }
    }

    pub fn resolve(&self, path: impl AsRef<Path>) -> PathBuf {
        let p = path.as_ref();
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn snapshot_path(&self, variant: &str, stage: Stage) -> PathBuf {
        self.out
            .join("snapshots")
            .join(format!("{variant}.{}.jsonl", stage.name()))
    }

    pub fn variants(&self) -> CliResult<&[Variant]> {
        if self.config.variants.is_empty() {
            invalid!("the configuration lists no variants");
        }
        Ok(&self.config.variants)
    }

    /// Fails validation when an input produced by an earlier step is absent.
    pub fn require(&self, path: &Path, what: &str) -> CliResult<()> {
        if !path.is_file() {
            invalid!("{what} not found: {}", path.display());
        }
        Ok(())
    }

    pub fn out_dir(&self, sub: &str) -> CliResult<PathBuf> {
        let dir = if sub.is_empty() {
            self.out.clone()
        } else {
            self.out.join(sub)
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn load_stage(&self, variant: &str, stage: Stage) -> CliResult<CorpusSnapshot> {
        let path = self.snapshot_path(variant, stage);
        self.require(&path, &format!("{} snapshot of `{variant}`", stage.name()))?;
        Ok(snapshot_io::read(&path)?)
    }
}

/// Decodes every distinct audio path referenced by the snapshots once.
pub(crate) fn decode_all<'a>(
    snapshots: impl IntoIterator<Item = &'a CorpusSnapshot>,
    sample_rate: u32,
) -> CliResult<HashMap<String, Vec<f64>>> {
    let mut paths: Vec<&str> = snapshots
        .into_iter()
        .flat_map(|s| s.utterances().iter().filter_map(|u| u.path.as_deref()))
        .collect();
    paths.sort_unstable();
    paths.dedup();
    let decoded: Vec<(String, Vec<f64>)> = paths
        .par_iter()
        .map(|p| audio::read_audio(Path::new(p), sample_rate).map(|s| (p.to_string(), s)))
        .collect::<Result<_, _>>()
        .map_err(anyhow::Error::from)?;
    Ok(decoded.into_iter().collect())
}

/// Samples of one utterance out of a decoded cache.
pub(crate) fn utterance_audio<'a>(
    cache: &'a HashMap<String, Vec<f64>>,
    u: &curate_core::Utterance,
) -> CliResult<&'a [f64]> {
    let path = u
        .path
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("utterance `{}` has no audio path", u.id))?;
    let buf = cache
        .get(path)
        .ok_or_else(|| anyhow::anyhow!("audio for `{}` not decoded", u.id))?;
    Ok(audio::slice(buf, u.sample_rate, u.start_s, u.end_s))
}

/// Merges the sidecars configured for `variant` at `stage`, in file order.
/// Files are loaded concurrently; merges happen one after another.
pub(crate) fn merge_sidecars(
    ctx: &Context,
    snapshot: CorpusSnapshot,
    variant: &str,
    specs: &[SidecarSpec],
    stage: SidecarStage,
) -> CliResult<CorpusSnapshot> {
    let chosen: Vec<&SidecarSpec> = specs
        .iter()
        .filter(|s| s.stage == stage && s.applies_to(variant))
        .collect();
    for spec in &chosen {
        let path = ctx.resolve(spec.path_for(variant));
        if !path.is_file() {
            invalid!(
                "{} sidecar for `{variant}` not found: {}",
                spec.metric,
                path.display()
            );
        }
    }
    let tables = chosen
        .par_iter()
        .map(|spec| sidecar_io::load_metric(&ctx.resolve(spec.path_for(variant)), spec.metric))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut snapshot = snapshot;
    for (spec, table) in chosen.iter().zip(&tables) {
        let report = sidecar::merge(
            &snapshot,
            table,
            spec.policy.into(),
            MergeKey::from(spec.key),
        )
        .with_context(|| format!("attaching {} to `{variant}`", spec.metric))?;
        if !report.replaced.is_empty() {
            log::warn!(
                "{variant}: {} replaced {} existing value(s)",
                spec.metric,
                report.replaced.len()
            );
        }
        if report.coverage < 1.0 {
            log::warn!(
                "{variant}: {} covers {:.1}% of utterances",
                spec.metric,
                100.0 * report.coverage
            );
        }
        snapshot = report.snapshot;
        snapshot
            .provenance
            .sources
            .insert(spec.metric, spec.path_for(variant));
    }
    Ok(snapshot)
}

pub(crate) fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}
