use std::fs;
use std::path::Path;

use curate::audio;
use curate::config::RunConfig;
use curate::manifest::{self, IngestOptions, ManifestRow};
use curate::{sidecar_io, snapshot_io};
use curate_core::sidecar::{TimestampTable, WordStamp};
use curate_core::{CorpusSnapshot, MetricKind, Utterance};
use hound::{SampleFormat, WavSpec, WavWriter};
use proptest::prelude::*;

fn write_i16(path: &Path, channels: u16, rate: u32, frames: &[Vec<i16>]) {
    let spec = WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).unwrap();
    for frame in frames {
        for s in frame {
            w.write_sample(*s).unwrap();
        }
    }
    w.finalize().unwrap();
}

fn ramp(n: usize) -> Vec<i16> {
    (0..n)
        .map(|i| ((i * 37) % 20_000) as i16 - 10_000)
        .collect()
}

#[test]
fn stereo_with_identical_channels_mixes_to_the_same_signal() {
    let dir = tempfile::tempdir().unwrap();
    let (mono, stereo) = (dir.path().join("m.wav"), dir.path().join("s.wav"));
    let x = ramp(1000);
    write_i16(
        &mono,
        1,
        16_000,
        &x.iter().map(|s| vec![*s]).collect::<Vec<_>>(),
    );
    write_i16(
        &stereo,
        2,
        16_000,
        &x.iter().map(|s| vec![*s, *s]).collect::<Vec<_>>(),
    );
    assert_eq!(
        audio::read_audio(&mono, 16_000).unwrap(),
        audio::read_audio(&stereo, 16_000).unwrap()
    );
}

#[test]
fn matching_rate_is_a_pure_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    let x = ramp(4000);
    write_i16(
        &path,
        1,
        16_000,
        &x.iter().map(|s| vec![*s]).collect::<Vec<_>>(),
    );
    let y = audio::read_audio(&path, 16_000).unwrap();
    assert_eq!(y.len(), x.len());
    for (a, b) in x.iter().zip(&y) {
        assert_eq!(*a as f64 / 32768.0, *b);
    }
}

#[test]
fn silence_upsamples_to_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    write_i16(&path, 1, 8000, &vec![vec![0]; 8000]);
    let y = audio::read_audio(&path, 16_000).unwrap();
    assert_eq!(y.len(), 16_000);
    assert!(y.iter().all(|v| *v == 0.0));
}

#[test]
fn float_round_trip_and_clipping() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.wav");
    let x = vec![0.25, -0.5, 1.5, -2.0];
    audio::write_wav(&path, &x, 16_000).unwrap();
    assert_eq!(
        audio::read_audio(&path, 16_000).unwrap(),
        vec![0.25, -0.5, 1.0, -1.0]
    );
}

/// A mono 64-bit IEEE float WAV, written by hand.
fn float64_wav(samples: &[f64]) -> Vec<u8> {
    let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    let mut out = Vec::new();
    out.extend(b"RIFF");
    out.extend((36 + data.len() as u32).to_le_bytes());
    out.extend(b"WAVEfmt ");
    out.extend(16u32.to_le_bytes());
    out.extend(3u16.to_le_bytes());
    out.extend(1u16.to_le_bytes());
    out.extend(16_000u32.to_le_bytes());
    out.extend(128_000u32.to_le_bytes());
    out.extend(8u16.to_le_bytes());
    out.extend(64u16.to_le_bytes());
    out.extend(b"data");
    out.extend((data.len() as u32).to_le_bytes());
    out.extend(data);
    out
}

#[test]
fn empty_and_unsupported_audio_fail() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("e.wav");
    write_i16(&empty, 1, 16_000, &[]);
    assert!(matches!(
        audio::read_audio(&empty, 16_000),
        Err(audio::AudioError::Empty { .. })
    ));

    let odd = dir.path().join("o.wav");
    let spec = WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 32,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(&odd, spec).unwrap();
    w.write_sample(5i32).unwrap();
    w.finalize().unwrap();
    assert!(audio::read_audio(&odd, 16_000).is_ok());

    let wide = dir.path().join("d.wav");
    fs::write(&wide, float64_wav(&[0.5, -0.25])).unwrap();
    let err = audio::read_audio(&wide, 16_000).unwrap_err().to_string();
    assert!(err.contains("64"), "{err}");

    let text = dir.path().join("t.wav");
    fs::write(&text, b"not a wave file").unwrap();
    assert!(audio::read_audio(&text, 16_000).is_err());
}

#[test]
fn resampling_preserves_duration() {
    let x: Vec<f64> = (0..22_050).map(|i| (i as f64 * 0.01).sin()).collect();
    assert_eq!(audio::resample_linear(&x, 22_050, 16_000).len(), 16_000);
    assert_eq!(audio::resample_linear(&x, 22_050, 44_100).len(), 44_100);
}

fn corpus(dir: &Path, n: usize, seconds: usize) -> Vec<ManifestRow> {
    (0..n)
        .map(|i| {
            let name = format!("r{i}.wav");
            write_i16(
                &dir.join(&name),
                1,
                16_000,
                &ramp(seconds * 16_000)
                    .into_iter()
                    .map(|s| vec![s])
                    .collect::<Vec<_>>(),
            );
            ManifestRow {
                id: format!("r{i}"),
                path: name,
                speaker_id: Some("spk".into()),
                start_s: None,
                end_s: None,
            }
        })
        .collect()
}

#[test]
fn three_ten_second_rows() {
    let dir = tempfile::tempdir().unwrap();
    let rows = corpus(dir.path(), 3, 10);
    let path = dir.path().join("m.jsonl");
    manifest::write_manifest(&path, &rows).unwrap();
    let got = manifest::ingest_manifest(&path, "raw", IngestOptions::default()).unwrap();
    assert_eq!(got.snapshot.len(), 3);
    assert!((got.snapshot.total_hours() - 30.0 / 3600.0).abs() < 1e-12);
    assert_eq!(
        got.snapshot.utterances()[1].speaker_id.as_deref(),
        Some("spk")
    );
}

#[test]
fn csv_manifest_with_extents() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), 1, 4);
    let path = dir.path().join("m.csv");
    fs::write(
        &path,
        "id,path,speaker_id,start_s,end_s\na,r0.wav,,0.5,2.5\nb,r0.wav,s1,,\n",
    )
    .unwrap();
    let snap = manifest::ingest_manifest(&path, "raw", IngestOptions::default())
        .unwrap()
        .snapshot;
    assert_eq!(snap.utterances()[0].duration_s, 2.0);
    assert_eq!(snap.utterances()[1].duration_s, 4.0);
    assert_eq!(snap.utterances()[1].speaker_id.as_deref(), Some("s1"));
}

#[test]
fn empty_manifest_gives_empty_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    fs::write(&path, "").unwrap();
    let snap = manifest::ingest_manifest(&path, "raw", IngestOptions::default())
        .unwrap()
        .snapshot;
    assert!(snap.is_empty());
    assert_eq!(snap.total_hours(), 0.0);
}

#[test]
fn missing_audio_fails_strict_and_is_skipped_when_permitted() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = corpus(dir.path(), 3, 1);
    rows[1].path = "gone.wav".into();
    let path = dir.path().join("m.jsonl");
    manifest::write_manifest(&path, &rows).unwrap();
    let err = manifest::ingest_manifest(&path, "raw", IngestOptions::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("line 2") && err.contains("r1"), "{err}");
    let lenient = IngestOptions {
        error_limit: 0.5,
        ..IngestOptions::default()
    };
    let got = manifest::ingest_manifest(&path, "raw", lenient).unwrap();
    assert_eq!(got.snapshot.len(), 2);
    assert_eq!(got.skipped.len(), 1);
}

#[test]
fn duplicate_manifest_id_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = corpus(dir.path(), 2, 1);
    rows[1].id = rows[0].id.clone();
    let path = dir.path().join("m.jsonl");
    manifest::write_manifest(&path, &rows).unwrap();
    let err = manifest::ingest_manifest(
        &path,
        "raw",
        IngestOptions {
            error_limit: 1.0,
            ..Default::default()
        },
    );
    assert!(matches!(
        err,
        Err(manifest::ManifestError::DuplicateId { .. })
    ));
}

#[test]
fn ingest_serialization_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let rows = corpus(dir.path(), 4, 2);
    let path = dir.path().join("m.jsonl");
    manifest::write_manifest(&path, &rows).unwrap();
    let a = manifest::ingest_manifest(&path, "raw", IngestOptions::default())
        .unwrap()
        .snapshot;
    let b = manifest::ingest_manifest(&path, "raw", IngestOptions::default())
        .unwrap()
        .snapshot;
    assert_eq!(
        snapshot_io::to_bytes(&a).unwrap(),
        snapshot_io::to_bytes(&b).unwrap()
    );
}

#[test]
fn metric_sidecar_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mos.csv");
    fs::write(&path, "id,value\nu1,3.2\nu2,4.1\n").unwrap();
    let table = sidecar_io::load_metric(&path, MetricKind::MosNisqa).unwrap();
    assert_eq!((table.len(), table.get("u2")), (2, Some(4.1)));

    fs::write(&path, "id,value\nu1,3.2\nu2,5.7\n").unwrap();
    let err = format!(
        "{:#}",
        sidecar_io::load_metric(&path, MetricKind::MosNisqa).unwrap_err()
    );
    assert!(
        err.contains("line 3") && err.contains("MOS outside [1, 5]"),
        "{err}"
    );

    fs::write(&path, "id,value\nu1,3.2\nu1,4.0\n").unwrap();
    let err = format!(
        "{:#}",
        sidecar_io::load_metric(&path, MetricKind::MosNisqa).unwrap_err()
    );
    assert!(err.contains("duplicate"), "{err}");

    fs::write(&path, "id,value\nu1,abc\nu2,3\nu3,x\n").unwrap();
    let err = format!(
        "{:#}",
        sidecar_io::load_metric(&path, MetricKind::MosNisqa).unwrap_err()
    );
    assert!(err.contains("line 2") && err.contains("line 4"), "{err}");

    fs::write(&path, "id,value\nu1,\nu2,3\n").unwrap();
    assert_eq!(
        sidecar_io::load_metric(&path, MetricKind::MosNisqa)
            .unwrap()
            .len(),
        1
    );

    fs::write(&path, "name,score\nu1,3\n").unwrap();
    assert!(sidecar_io::load_metric(&path, MetricKind::MosNisqa).is_err());
}

#[test]
fn metric_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snr.csv");
    let rows = vec![
        ("a".to_string(), Some(0.1 + 0.2)),
        ("b".to_string(), None),
        ("c".to_string(), Some(-3.5)),
    ];
    sidecar_io::write_metric(&path, &rows).unwrap();
    let t = sidecar_io::load_metric(&path, MetricKind::Snr).unwrap();
    assert_eq!(
        (t.get("a"), t.get("b"), t.get("c")),
        (Some(0.1 + 0.2), None, Some(-3.5))
    );
}

#[test]
fn timestamps_round_trip_and_reject_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ts.jsonl");
    let w = |word: &str, start, end| WordStamp {
        word: word.into(),
        start,
        end,
    };
    let table = TimestampTable::from_rows([
        (
            None,
            "a".to_string(),
            vec![w("hola", 0.1, 0.4), w("mundo", 0.5, 0.9)],
        ),
        (None, "b".to_string(), vec![]),
    ])
    .unwrap();
    sidecar_io::write_timestamps(&path, &table).unwrap();
    assert_eq!(sidecar_io::load_timestamps(&path).unwrap(), table);

    fs::write(&path, "{\"id\":\"a\",\"words\":[{\"w\":\"x\",\"start\":0.5,\"end\":1.0},{\"w\":\"y\",\"start\":0.8,\"end\":1.2}]}\n").unwrap();
    let err = format!("{:#}", sidecar_io::load_timestamps(&path).unwrap_err());
    assert!(err.contains("overlap"), "{err}");
}

#[test]
fn snapshot_rejects_other_schema_versions() {
    let snap = CorpusSnapshot::new(
        "x",
        vec![Utterance::new("a", "a", 0.0, 1.0, 16_000).unwrap()],
    )
    .unwrap();
    let text = String::from_utf8(snapshot_io::to_bytes(&snap).unwrap()).unwrap();
    assert!(
        snapshot_io::from_str(&text.replace("\"schema_version\":1", "\"schema_version\":9"))
            .is_err()
    );
}

#[test]
fn shipped_config_parses() {
    let text = include_str!("../../../configs/synthetic.toml");
    let config = RunConfig::from_toml(text).unwrap();
    assert_eq!(config.variants.len(), 3);
    assert_eq!(
        config
            .filters
            .iter()
            .map(|f| f.thresholds.len())
            .sum::<usize>(),
        8
    );
}

#[test]
fn config_rejects_bad_values() {
    assert!(RunConfig::from_toml("[weights]\ndr = -1.0\n").is_err());
    assert!(RunConfig::from_toml("sampel_rate = 16000\n").is_err());
    assert!(
        RunConfig::from_toml("[[variants]]\nname = \"dfn\"\nmanifest = \"m.jsonl\"\n").is_err()
    );
    assert!(
        RunConfig::from_toml("[weights]\nsq = 2.0\n")
            .unwrap()
            .weights
            .dr
            == 1.0
    );
}

fn utterance() -> impl Strategy<Value = Utterance> {
    (
        "[a-z0-9_]{1,8}",
        0.0f64..1e4,
        1e-6f64..1e3,
        prop::collection::btree_map(
            prop::sample::select(MetricKind::ALL.to_vec()),
            -1e6f64..1e6,
            0..5,
        ),
        prop::option::of("[a-z]{1,5}"),
    )
        .prop_map(|(id, start, dur, metrics, speaker)| {
            let mut u = Utterance::new(id.clone(), format!("src_{id}"), start, start + dur, 16_000)
                .unwrap();
            u.metrics = metrics;
            u.speaker_id = speaker;
            u.path = Some(format!("/audio/{id}.wav"));
            u
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_round_trips_bit_exactly(utts in prop::collection::vec(utterance(), 0..20)) {
        let mut seen = std::collections::HashSet::new();
        let utts: Vec<Utterance> = utts.into_iter().filter(|u| seen.insert(u.id.clone())).collect();
        let mut snap = CorpusSnapshot::new("p", utts).unwrap();
        snap.provenance.coverage.insert(MetricKind::Snr, 0.9);
        snap.provenance.notes.push("n".into());
        let bytes = snapshot_io::to_bytes(&snap).unwrap();
        let back = snapshot_io::from_str(std::str::from_utf8(&bytes).unwrap()).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(snapshot_io::to_bytes(&back).unwrap(), bytes);
    }
}
