//! CSV and text reports. Column orders are fixed; see the README.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use curate_core::scoring::{Ranked, SubsetScores};
use curate_core::stats::Summary;
use curate_core::sweep::{ConfigFailure, ConfigRun, ScatterPoint, SensitivityReport, Stage};
use curate_core::tpe::TrialRecord;
use curate_core::vad::VadParams;
use curate_core::MetricKind;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn summary_cells(s: Option<&Summary>) -> [String; 2] {
    [opt(s.map(|s| s.mean)), opt(s.map(|s| s.std))]
}

fn metric_header(prefix: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for k in MetricKind::ALL {
        h.push(format!("{k}_mean"));
        h.push(format!("{k}_std"));
    }
    h
}

/// File-system safe form of a configuration name.
pub fn file_stem(config: &str) -> String {
    config
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One ranked row per scored configuration, then quarantined failures.
pub fn write_ranking(path: &Path, ranked: &[Ranked], failures: &[(String, String)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "rank", "config", "dr", "sq", "ap", "sd", "total", "status", "error",
    ])?;
    for (i, r) in ranked.iter().enumerate() {
        let s = r.scores;
        w.write_record([
            (i + 1).to_string(),
            r.config.clone(),
            num(s.dr),
            num(s.sq),
            num(s.ap),
            num(s.sd),
            num(s.total),
            "ok".into(),
            String::new(),
        ])?;
    }
    for (config, error) in failures {
        w.write_record(["", config, "", "", "", "", "", "failed", error])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per configuration in grid order.
pub fn write_sweep(path: &Path, results: &[Result<ConfigRun, ConfigFailure>]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = metric_header(&[
        "config",
        "enhancement",
        "filter_metric",
        "threshold",
        "vad_profile",
        "processed_count",
        "processed_hours",
        "retained_count",
        "retained_hours",
        "eliminated_count",
        "eliminated_hours",
    ]);
    header.extend(["dr", "sq", "ap", "sd", "total", "status", "error"].map(String::from));
    w.write_record(&header)?;
    for r in results {
        let (cfg, stages, scores, error) = match r {
            Ok(run) => (&run.config, Some(&run.stages), Some(run.scores), None),
            Err(f) => (&f.config, None, None, Some(f.error.as_str())),
        };
        let stage = |i: usize| stages.map(|s| &s[i]);
        let mut row = vec![
            cfg.name(),
            cfg.enhancement.clone(),
            cfg.filter_metric.to_string(),
            num(cfg.threshold),
            cfg.vad_profile.clone(),
        ];
        for i in 1..4 {
            row.push(stage(i).map(|s| s.count.to_string()).unwrap_or_default());
            row.push(opt(stage(i).map(|s| s.hours)));
        }
        for k in MetricKind::ALL {
            row.extend(summary_cells(stage(2).and_then(|s| s.metrics.get(&k))));
        }
        let sc = |f: fn(&SubsetScores) -> f64| opt(scores.as_ref().map(f));
        row.extend([
            sc(|s| s.dr),
            sc(|s| s.sq),
            sc(|s| s.ap),
            sc(|s| s.sd),
            sc(|s| s.total),
        ]);
        row.push(if error.is_some() { "failed" } else { "ok" }.into());
        row.push(error.unwrap_or_default().into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-stage breakdown of one configuration.
pub fn write_stages(path: &Path, stages: &[Stage]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(metric_header(&["stage", "count", "hours"]))?;
    for s in stages {
        let mut row = vec![s.name.clone(), s.count.to_string(), num(s.hours)];
        for k in MetricKind::ALL {
            row.extend(summary_cells(s.metrics.get(&k)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The three trade-off plots: `(x, y)` per configuration.
pub fn write_scatter(dir: &Path, points: &[ScatterPoint]) -> Result<()> {
    type Axis = fn(&ScatterPoint) -> f64;
    let plots: [(&str, &str, Axis, &str, Axis); 3] = [
        (
            "scatter_dr_pesq.csv",
            "dataset_reduction",
            |p| p.dataset_reduction,
            "pesq_improvement_pct",
            |p| p.pesq_improvement_pct,
        ),
        (
            "scatter_dr_t30.csv",
            "dataset_reduction",
            |p| p.dataset_reduction,
            "t30_improvement_pct",
            |p| p.t30_improvement_pct,
        ),
        (
            "scatter_f0std_pesq.csv",
            "f0std_diff",
            |p| p.f0std_diff,
            "pesq_improvement_pct",
            |p| p.pesq_improvement_pct,
        ),
    ];
    for (file, xn, x, yn, y) in plots {
        let mut w = writer(&dir.join(file))?;
        w.write_record(["config", xn, yn])?;
        for p in points {
            w.write_record([p.config.clone(), num(x(p)), num(y(p))])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn write_sensitivity(path: &Path, reports: &[(String, SensitivityReport)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "variant",
        "metric",
        "threshold",
        "retained_fraction",
        "sensitivity",
        "delta",
        "count",
        "median",
        "variance",
    ])?;
    for (variant, r) in reports {
        for row in &r.rows {
            w.write_record([
                variant.clone(),
                r.metric.to_string(),
                num(row.threshold),
                num(row.retained_fraction),
                opt(row.sensitivity),
                num(r.delta),
                r.count.to_string(),
                num(r.median),
                num(r.variance),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `config,id,retained` for every filtered utterance.
pub fn write_partitions(path: &Path, runs: &[&ConfigRun]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["config", "id", "retained"])?;
    for run in runs {
        let name = run.config.name();
        let o = &run.outcome;
        let mut rows: Vec<(&str, bool)> = o.retained.ids().map(|id| (id, true)).collect();
        rows.extend(o.eliminated.ids().map(|id| (id, false)));
        rows.sort_unstable();
        for (id, kept) in rows {
            w.write_record([name.as_str(), id, if kept { "1" } else { "0" }])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `index,<param>...,objective`.
pub fn write_trials(path: &Path, history: &[TrialRecord]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["index"];
    header.extend(VadParams::NAMES);
    header.push("objective");
    w.write_record(&header)?;
    for t in history {
        let mut row = vec![t.index.to_string()];
        row.extend(t.params.iter().map(|v| num(*v)));
        row.push(num(t.objective));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text table of a ranking.
pub fn render_ranking(ranked: &[Ranked], failures: &[(String, String)]) -> String {
    let width = ranked
        .iter()
        .map(|r| r.config.len())
        .chain(failures.iter().map(|f| f.0.len()))
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
        "rank", "config", "DR", "SQ", "AP", "SD", "Total"
    );
    for (i, r) in ranked.iter().enumerate() {
        let s = r.scores;
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}",
            i + 1,
            r.config,
            s.dr,
            s.sq,
            s.ap,
            s.sd,
            s.total
        );
    }
    for (config, error) in failures {
        let _ = writeln!(out, "{:>4}  {:<width$}  failed: {error}", "-", config);
    }
    out
}
