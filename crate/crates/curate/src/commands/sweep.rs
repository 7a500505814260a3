//! `sweep`: run every configuration of the grid, rank, and write reports:
//! `ranking.csv`, `sweep.csv`, `stages/stages_<config>.csv`,
//! `scatter_*.csv`, `sensitivity.csv`, `partitions.csv`, `report.txt`.

use std::collections::BTreeMap;

use anyhow::Context as _;
use curate_core::scoring::{self, Ranked};
use curate_core::sweep::{self, ConfigFailure, ConfigRun, FilterGrid, RunOptions};
use curate_core::CorpusSnapshot;
use rayon::prelude::*;

use super::{runtime, Context};
use crate::config::RAW_VARIANT;
use crate::error::{CliError, CliResult};
use crate::report;

pub fn run(ctx: &Context) -> CliResult<()> {
    let variants = ctx.variants()?;
    let stage = ctx.config.sweep.stage;
    let mut processed = BTreeMap::new();
    for v in variants {
        processed.insert(v.name.clone(), ctx.load_stage(&v.name, stage)?);
    }
    let raw: &CorpusSnapshot = &processed[RAW_VARIANT];
    let filters: Vec<FilterGrid> = ctx
        .config
        .filters
        .iter()
        .map(|f| FilterGrid {
            metric: f.metric,
            thresholds: f.thresholds.clone(),
        })
        .collect();
    let grid = sweep::build_grid(
        &ctx.config.variant_names(),
        &filters,
        &ctx.config.segment.profile,
    )
    .map_err(CliError::validation)?;
    let options = RunOptions {
        weights: ctx.config.weights,
        mcd_reference_db: ctx.config.sweep.mcd_reference_db,
    };

    let results: Vec<Result<ConfigRun, ConfigFailure>> = grid
        .par_iter()
        .map(|cfg| sweep::run_config_or_failure(raw, cfg, &processed, &options))
        .collect();
    for run in results.iter().flatten() {
        run.outcome
            .verify(&processed[&run.config.enhancement])
            .with_context(|| format!("partition check of {}", run.config.name()))?;
    }

    let ranked = scoring::rank(
        results
            .iter()
            .flatten()
            .map(|r| Ranked {
                config: r.config.name(),
                scores: r.scores,
            })
            .collect(),
    );
    let failures: Vec<(String, String)> = results
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(|f| (f.config.name(), f.error.clone()))
        .collect();
    for (config, error) in &failures {
        log::warn!("quarantined {config}: {error}");
    }

    let out = ctx.out_dir("")?;
    report::write_ranking(&out.join("ranking.csv"), &ranked, &failures)?;
    report::write_sweep(&out.join("sweep.csv"), &results)?;
    let stages_dir = ctx.out_dir("stages")?;
    let runs: Vec<&ConfigRun> = results.iter().flatten().collect();
    for run in &runs {
        let name = report::file_stem(&run.config.name());
        report::write_stages(&stages_dir.join(format!("stages_{name}.csv")), &run.stages)?;
    }
    let mut points = Vec::new();
    for run in &runs {
        match sweep::scatter_point(run) {
            Ok(p) => points.push(p),
            Err(e) => log::warn!("no scatter point for {}: {e}", run.config.name()),
        }
    }
    report::write_scatter(&out, &points)?;
    report::write_partitions(&out.join("partitions.csv"), &runs)?;

    let mut sensitivity = Vec::new();
    for v in variants {
        for f in &ctx.config.filters {
            let mut thresholds = f.thresholds.clone();
            thresholds.sort_by(f64::total_cmp);
            match sweep::filter_sensitivity(
                &processed[&v.name],
                f.metric,
                &thresholds,
                ctx.config.sweep.sensitivity_delta,
            ) {
                Ok(r) => sensitivity.push((v.name.clone(), r)),
                Err(e) => log::warn!("no sensitivity for {} on `{}`: {e}", f.metric, v.name),
            }
        }
    }
    report::write_sensitivity(&out.join("sensitivity.csv"), &sensitivity)?;
    std::fs::write(
        out.join("report.txt"),
        report::render_ranking(&ranked, &failures),
    )
    .map_err(runtime)?;
    log::info!(
        "sweep: {} configurations, {} scored, {} quarantined",
        grid.len(),
        ranked.len(),
        failures.len()
    );
    Ok(())
}
