//! Sidecar files.
//!
//! Metric sidecars are CSV with header `id,value`; an empty `value` marks a
//! row whose metric could not be computed. Word timestamps are JSON lines
//! `{"id": ..., "words": [{"w": ..., "start": ..., "end": ...}]}`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use curate_core::sidecar::{MetricTable, TimestampTable, WordStamp};
use curate_core::{MetricKind, RowIssue};
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
struct MetricRow {
    id: String,
    value: Option<String>,
}

/// Loads and validates one metric sidecar. Rows with an empty value are
/// skipped; malformed or out-of-range rows fail with their line numbers.
pub fn load_metric(path: &Path, metric: MetricKind) -> Result<MetricTable> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "value"] {
        anyhow::bail!(
            "{}: header must be `id,value`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for (i, rec) in reader.deserialize::<MetricRow>().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue {
                    line: Some(line),
                    id: String::new(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match rec.value.as_deref().map(str::trim) {
            None | Some("") => {}
            Some(text) => match text.parse::<f64>() {
                Ok(v) => rows.push((Some(line), rec.id, v)),
                Err(_) => issues.push(RowIssue {
                    line: Some(line),
                    id: rec.id,
                    reason: format!("`{text}` is not a number"),
                }),
            },
        }
    }
    if !issues.is_empty() {
        return Err(curate_core::Error::InvalidRows(issues))
            .with_context(|| format!("{} ({metric})", path.display()));
    }
    MetricTable::from_rows(metric, rows).with_context(|| format!("{} ({metric})", path.display()))
}

/// Writes `id,value` rows in the given order; `None` becomes an empty value.
pub fn write_metric(path: &Path, rows: &[(String, Option<f64>)]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["id", "value"])?;
    for (id, value) in rows {
        w.write_record([id.clone(), value.map(|v| v.to_string()).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TimestampLine {
    id: String,
    words: Vec<WordStamp>,
}

pub fn load_timestamps(path: &Path) -> Result<TimestampTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let rec: TimestampLine = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        rows.push((Some(i + 1), rec.id, rec.words));
    }
    TimestampTable::from_rows(rows).with_context(|| path.display().to_string())
}

pub fn write_timestamps(path: &Path, table: &TimestampTable) -> Result<()> {
    let mut out = Vec::new();
    for (id, words) in table.iter() {
        serde_json::to_writer(
            &mut out,
            &TimestampLine {
                id: id.to_string(),
                words: words.to_vec(),
            },
        )?;
        out.push(b'\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
