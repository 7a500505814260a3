//! Corpus manifests: one record per recording or utterance.
//!
//! JSON lines (`{"id", "path", "speaker_id"?, "start_s"?, "end_s"?}`) or CSV
//! with the same header names. Relative paths resolve against the manifest's
//! directory. Absent `start_s`/`end_s` cover the whole file.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use curate_core::{CorpusSnapshot, Utterance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("duplicate id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("{failed} of {total} rows failed (limit {limit}):\n{}", .errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    TooManyErrors {
        failed: usize,
        total: usize,
        limit: f64,
        errors: Vec<RowError>,
    },
    #[error(transparent)]
    Core(#[from] curate_core::Error),
}

/// One manifest row that could not be ingested.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {} (`{}`): {}", self.line, self.id, self.reason)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Rows with their 1-based line numbers.
pub fn read_manifest(path: &Path) -> Result<Vec<(usize, ManifestRow)>, ManifestError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: shown.clone(),
        source,
    })?;
    let malformed = |line, reason: String| ManifestError::Malformed {
        path: shown.clone(),
        line,
        reason,
    };
    if is_csv(path) {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        reader
            .deserialize::<ManifestRow>()
            .enumerate()
            .map(|(i, row)| {
                row.map(|r| (i + 2, r))
                    .map_err(|e| malformed(i + 2, e.to_string()))
            })
            .collect()
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<ManifestRow>(l)
                    .map(|r| (i + 1, r))
                    .map_err(|e| malformed(i + 1, e.to_string()))
            })
            .collect()
    }
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> std::io::Result<()> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.push(b'\n');
    }
    fs::File::create(path)?.write_all(&out)
}

pub fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub sample_rate: u32,
    /// Fraction of rows allowed to fail before the ingest as a whole fails.
    pub error_limit: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            sample_rate: 16_000,
            error_limit: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub snapshot: CorpusSnapshot,
    /// Rows skipped under a permissive error limit.
    pub skipped: Vec<RowError>,
}

fn ingest_row(
    base: &Path,
    line: usize,
    row: &ManifestRow,
    sample_rate: u32,
) -> Result<Utterance, RowError> {
    let fail = |reason: String| RowError {
        line,
        id: row.id.clone(),
        reason,
    };
    let path = resolve(base, &row.path);
    let samples = audio::read_audio(&path, sample_rate).map_err(|e| fail(e.to_string()))?;
    let file_s = samples.len() as f64 / sample_rate as f64;
    let start = row.start_s.unwrap_or(0.0);
    let end = row.end_s.unwrap_or(file_s);
    if end > file_s + 1.0 / sample_rate as f64 {
        return Err(fail(format!("end_s {end} beyond file duration {file_s}")));
    }
    let mut utt = Utterance::new(&row.id, &row.id, start, end, sample_rate)
        .map_err(|e| fail(e.to_string()))?
        .with_path(path.to_string_lossy());
    utt.speaker_id = row.speaker_id.clone();
    Ok(utt)
}

/// Decodes every referenced file in parallel and assembles the snapshot in
/// manifest order. Each row becomes its own source recording.
pub fn ingest_manifest(
    path: &Path,
    name: &str,
    options: IngestOptions,
) -> Result<Ingested, ManifestError> {
    let rows = read_manifest(path)?;
    let mut seen = HashSet::new();
    for (line, row) in &rows {
        if !seen.insert(row.id.as_str()) {
            return Err(ManifestError::DuplicateId {
                id: row.id.clone(),
                line: *line,
            });
        }
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let results: Vec<Result<Utterance, RowError>> = rows
        .par_iter()
        .map(|(line, row)| ingest_row(base, *line, row, options.sample_rate))
        .collect();
    let mut utterances = Vec::with_capacity(rows.len());
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(u) => utterances.push(u),
            Err(e) => skipped.push(e),
        }
    }
    if !skipped.is_empty() && skipped.len() as f64 > options.error_limit * rows.len() as f64 {
        return Err(ManifestError::TooManyErrors {
            failed: skipped.len(),
            total: rows.len(),
            limit: options.error_limit,
            errors: skipped,
        });
    }
    Ok(Ingested {
        snapshot: CorpusSnapshot::new(name, utterances)?,
        skipped,
    })
}
