//! Snapshot persistence as JSON lines.
//!
//! The first line is a header `{"schema_version", "name", "provenance"}`;
//! every following line is one utterance in manifest-like form with a
//! `metrics` object. Floats are written in shortest round-trip form, so a
//! reload reproduces the snapshot bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use curate_core::corpus::Provenance;
use curate_core::{CorpusSnapshot, Utterance};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    name: String,
    #[serde(default)]
    provenance: Provenance,
}

pub fn to_bytes(snapshot: &CorpusSnapshot) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let header = Header {
        schema_version: SCHEMA_VERSION,
        name: snapshot.name.clone(),
        provenance: snapshot.provenance.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for u in snapshot.utterances() {
        serde_json::to_writer(&mut out, u)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn from_str(text: &str) -> Result<CorpusSnapshot> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().context("snapshot file is empty")?;
    let header: Header = serde_json::from_str(first).context("line 1: snapshot header")?;
    if header.schema_version != SCHEMA_VERSION {
        bail!(
            "unsupported snapshot schema version {} (expected {SCHEMA_VERSION})",
            header.schema_version
        );
    }
    let utterances = lines
        .map(|(i, l)| {
            serde_json::from_str::<Utterance>(l).with_context(|| format!("line {}", i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut snapshot = CorpusSnapshot::new(header.name, utterances)?;
    snapshot.provenance = header.provenance;
    Ok(snapshot)
}

pub fn write(path: &Path, snapshot: &CorpusSnapshot) -> Result<()> {
    fs::write(path, to_bytes(snapshot)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path) -> Result<CorpusSnapshot> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_str(&text).with_context(|| path.display().to_string())
}
