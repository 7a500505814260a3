use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::LN_10;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use curate_core::dsp::{self, Alignment, CepstraSequence, FramePlan, YinSettings, NUM_CEPSTRA};
use curate_core::scoring::{self, AggregateMetrics, Ranked, ScoreWeights, MCD_REFERENCE_DB};
use curate_core::sweep;
use curate_core::synth;
use curate_core::tpe::{self, ParamKind, ParamSpace, ParamSpec, TpeSettings};
use curate_core::MetricKind::{self, *};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within_time(start: Instant, limit: Duration, detail: String) -> Outcome {
    let spent = start.elapsed();
    ensure!(spent < limit, "{detail}; took {spent:.2?}, limit {limit:?}");
    Ok(format!("{detail}; {spent:.2?}"))
}

fn table1() -> (AggregateMetrics, AggregateMetrics) {
    let original = AggregateMetrics::from_means(
        24.3,
        [
            (Pesq, 2.82),
            (Snr, 19.1),
            (SiSdr, 17.8),
            (T30, 0.98),
            (C50, 15.9),
            (F0Std, 200.1),
        ],
    );
    let denoised = AggregateMetrics::from_means(
        13.2,
        [
            (Pesq, 3.28),
            (Snr, 22.6),
            (SiSdr, 21.1),
            (T30, 0.53),
            (C50, 19.1),
            (F0Std, 184.6),
            (Mcd, 2.79),
        ],
    );
    (original, denoised)
}

fn equations() -> Outcome {
    let start = Instant::now();
    let (r, p) = table1();
    let got = [
        scoring::score_dr(&r, &p).map_err(|e| e.to_string())?,
        scoring::score_sq(&r, &p).map_err(|e| e.to_string())?,
        scoring::score_ap(&r, &p).map_err(|e| e.to_string())?,
        scoring::score_sd(&r, &p, true, MCD_REFERENCE_DB).map_err(|e| e.to_string())?,
    ];
    let want = [0.4568, 2.5485, 1.3733, 0.6355];
    for ((name, g), w) in ["DR", "SQ", "AP", "SD"].iter().zip(got).zip(want) {
        ensure!((g - w).abs() <= 1e-3, "{name} = {g:.5}, expected {w}");
    }
    within_time(
        start,
        Duration::from_secs(1),
        format!(
            "(DR, SQ, AP, SD) = ({:.4}, {:.4}, {:.4}, {:.4})",
            got[0], got[1], got[2], got[3]
        ),
    )
}

fn table2() -> Outcome {
    let start = Instant::now();
    let rows = [
        ("No-den+NISQA:4.2", [0.89, 2.53, 1.65, 0.46], 5.53),
        ("Demucs+DNSMOS:3.4", [0.8, 2.23, 1.24, 0.78], 5.05),
        ("DFN+NISQA:3", [0.15, 2.67, 1.37, 0.63], 4.83),
        ("Demucs+DNSMOS:2.7", [0.02, 2.30, 1.29, 0.48], 4.08),
        ("No-den+DNSMOS:2.7", [0.19, 2.85, 1.82, 0.07], 4.93),
    ];
    let mut entries = Vec::new();
    for (name, [dr, sq, ap, sd], expected) in rows {
        let scores = scoring::composite(dr, sq, ap, sd, ScoreWeights::default());
        ensure!(
            (scores.total - expected).abs() <= 0.02,
            "{name}: total {:.4} vs {expected}",
            scores.total
        );
        entries.push(Ranked {
            config: name.into(),
            scores,
        });
    }
    let order: Vec<String> = scoring::rank(entries)
        .into_iter()
        .map(|r| r.config)
        .collect();
    let want = [
        "Demucs+DNSMOS:2.7",
        "DFN+NISQA:3",
        "No-den+DNSMOS:2.7",
        "Demucs+DNSMOS:3.4",
        "No-den+NISQA:4.2",
    ];
    ensure!(order == want, "order {order:?}");
    within_time(
        start,
        Duration::from_secs(1),
        format!("order {}", order.join(" < ")),
    )
}

fn identity() -> Outcome {
    let (r, _) = table1();
    let s = scoring::score(&r, &r, false, ScoreWeights::default(), MCD_REFERENCE_DB)
        .map_err(|e| e.to_string())?;
    let got = [s.dr, s.sq, s.ap, s.sd, s.total];
    for (g, w) in got.iter().zip([0.0, 3.0, 2.0, 0.0, 5.0]) {
        ensure!((g - w).abs() <= 1e-9, "scores {got:?}");
    }
    Ok(format!(
        "(DR, SQ, AP, SD) = ({}, {}, {}, {}), total {:.4}",
        s.dr, s.sq, s.ap, s.sd, s.total
    ))
}

fn wada() -> Outcome {
    let start = Instant::now();
    let (mut hits, mut total) = (0, 0);
    for snr in [0.0, 5.0, 10.0, 20.0] {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f0 = 90.0 + 160.0 * (seed as f64 / 19.0);
            let clean = synth::speech_like(3.0, 16_000, f0, 5.0, 6.0, &mut rng);
            let noise = synth::white_noise(clean.len(), &mut rng);
            let mix = synth::mix_at_snr(&clean, &noise, snr).map_err(|e| e.to_string())?;
            let est = dsp::wada_snr(&mix.samples, 16_000).map_err(|e| e.to_string())?;
            total += 1;
            hits += usize::from((est - snr).abs() <= 3.0);
        }
    }
    ensure!(hits * 10 >= total * 9, "{hits}/{total} within 3 dB");
    within_time(
        start,
        Duration::from_secs(30),
        format!("{hits}/{total} within 3 dB"),
    )
}

fn reverb() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (t60, seed) in [(0.2, 1u64), (0.5, 2), (1.0, 3)] {
        let rir = synth::exp_rir(t60, 1.5 * t60, 16_000, seed).map_err(|e| e.to_string())?;
        let t30 = synth::schroeder_t30(&rir, 16_000).map_err(|e| e.to_string())?;
        let c50 = synth::c50(&rir, 16_000).map_err(|e| e.to_string())?;
        // Exponential energy decay: C50 = 10 log10(e^{a/20} - 1), a = 6 ln 10 / t60 per second.
        let closed = 10.0 * ((6.0 * LN_10 * 0.05 / t60).exp() - 1.0).log10();
        ensure!((t30 / t60 - 1.0).abs() <= 0.05, "t60 {t60}: T30 {t30:.4}");
        ensure!(
            (c50 - closed).abs() <= 0.5,
            "t60 {t60}: C50 {c50:.3} vs {closed:.3}"
        );
        parts.push(format!("t60 {t60}: T30 {t30:.3}, C50 {c50:.2}/{closed:.2}"));
    }
    within_time(start, Duration::from_secs(5), parts.join("; "))
}

fn f0() -> Outcome {
    let start = Instant::now();
    let settings = YinSettings::default();
    let x = synth::vibrato_tone(220.0, 10.0, 5.0, 2.0, 16_000);
    let track = dsp::yin_f0(&x, 16_000, &settings).map_err(|e| e.to_string())?;
    let std = dsp::f0_std(&track).map_err(|e| e.to_string())?;
    let expected = 10.0 / 2f64.sqrt();
    ensure!(
        (std / expected - 1.0).abs() <= 0.15,
        "vibrato std {std:.3} vs {expected:.3}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 1.0f64;
    for _ in 0..10 {
        let f = rng.random_range(80.0..400.0);
        let track = dsp::yin_f0(&synth::tone(f, 1.0, 16_000), 16_000, &settings)
            .map_err(|e| e.to_string())?;
        let good = track
            .voiced()
            .filter(|v| (v / f - 1.0).abs() <= 0.01)
            .count();
        let frac = good as f64 / track.f0_hz.len() as f64;
        ensure!(
            frac >= 0.9,
            "{f:.1} Hz: {good}/{} frames within 1%",
            track.f0_hz.len()
        );
        worst = worst.min(frac);
    }
    within_time(
        start,
        Duration::from_secs(10),
        format!(
            "vibrato std {std:.3} Hz; worst tone {:.0}% of frames",
            100.0 * worst
        ),
    )
}

fn cepstra(rows: Vec<[f64; NUM_CEPSTRA]>) -> CepstraSequence {
    CepstraSequence {
        coeffs: rows,
        plan: FramePlan::default(),
        sample_rate: 16_000,
    }
}

fn mcd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<[f64; NUM_CEPSTRA]> = (0..50)
        .map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0)))
        .collect();
    let a = cepstra(rows.clone());
    let same = dsp::mcd(&a, &a, Alignment::None)
        .map_err(|e| e.to_string())?
        .mean_db;
    ensure!(same == 0.0, "mcd(a, a) = {same}");

    let mut shifted = rows;
    shifted.iter_mut().for_each(|r| r[3] += 0.5);
    let got = dsp::mcd(&a, &cepstra(shifted), Alignment::None)
        .map_err(|e| e.to_string())?
        .mean_db;
    let closed = 10.0 / LN_10 * (2.0f64 * 0.25).sqrt();
    ensure!(
        (got - closed).abs() <= 1e-6,
        "offset 0.5: {got} vs closed form {closed}"
    );
    let stated = 3.0715;

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let clean = synth::speech_like(2.0, 16_000, 130.0, 5.0, 5.0, &mut rng);
    let noise = synth::white_noise(clean.len(), &mut rng);
    let plan = FramePlan::default();
    let reference = dsp::mfcc(&clean, 16_000, plan).map_err(|e| e.to_string())?;
    let at = |snr: f64| -> Result<f64, String> {
        let mix = synth::mix_at_snr(&clean, &noise, snr).map_err(|e| e.to_string())?;
        let c = dsp::mfcc(&mix.samples, 16_000, plan).map_err(|e| e.to_string())?;
        Ok(dsp::mcd(&reference, &c, Alignment::None)
            .map_err(|e| e.to_string())?
            .mean_db)
    };
    let (high, low) = (at(20.0)?, at(0.0)?);
    ensure!(
        low > high && high > 0.0,
        "MCD at 20 dB {high:.3}, at 0 dB {low:.3}"
    );
    Ok(format!(
        "identity 0; offset 0.5 gives {got:.7} (closed form {closed:.7}, stated {stated} differs by {:.1e}); 20 dB {high:.2} < 0 dB {low:.2}",
        (stated - closed).abs()
    ))
}

fn quadratic(x: &[f64]) -> f64 {
    (x[0] - 0.3).powi(2)
}

fn tpe_search() -> Outcome {
    let start = Instant::now();
    let space = ParamSpace::new(vec![
        ParamSpec::new("x", ParamKind::Uniform, 0.0, 1.0).map_err(|e| e.to_string())?
    ])
    .map_err(|e| e.to_string())?;
    let mut near = 0;
    for seed in 0..10u64 {
        let s = TpeSettings {
            seed,
            ..TpeSettings::default()
        };
        let run = tpe::optimize(&space, quadratic, 60, &s).map_err(|e| e.to_string())?;
        near += usize::from((run.best.params[0] - 0.3).abs() <= 0.05);
    }
    let mut wins = 0;
    for seed in 0..20u64 {
        let s = TpeSettings {
            seed,
            ..TpeSettings::default()
        };
        let best = tpe::optimize(&space, quadratic, 60, &s)
            .map_err(|e| e.to_string())?
            .best
            .objective;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = (0..60)
            .map(|_| quadratic(&[rng.random_range(0.0..1.0)]))
            .fold(f64::INFINITY, f64::min);
        wins += usize::from(best <= random);
    }
    ensure!(
        near >= 8 && wins >= 14,
        "{near}/10 seeds near optimum, {wins}/20 paired wins"
    );
    within_time(
        start,
        Duration::from_secs(10),
        format!("{near}/10 seeds near optimum, {wins}/20 paired wins"),
    )
}

fn rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            Ok(headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> Result<f64, String> {
    row[key]
        .parse()
        .map_err(|_| format!("{}: bad {key} {:?}", row["config"], row[key]))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/synthetic.toml");
    fs::copy(config, dir.path().join("synthetic.toml")).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut steps = Vec::new();
    for step in ["synth", "ingest", "segment", "metrics", "attach", "sweep"] {
        let t = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_curate"))
            .args(["--config", "synthetic.toml", step])
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.success(),
            "{step} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        steps.push(format!("{step} {:.1}s", t.elapsed().as_secs_f64()));
    }
    let out = dir.path().join("out");

    let ranking = rows(&out.join("ranking.csv"))?;
    ensure!(ranking.len() == 24, "ranking has {} rows", ranking.len());
    let scored = ranking.iter().filter(|r| r["status"] == "ok").count();

    let mut ids: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for variant in ["none", "dfn", "demucs"] {
        let text = fs::read_to_string(out.join(format!("snapshots/{variant}.attached.jsonl")))
            .map_err(|e| e.to_string())?;
        let set = text
            .lines()
            .skip(1)
            .map(|l| {
                serde_json::from_str::<serde_json::Value>(l)
                    .map(|v| v["id"].as_str().unwrap_or_default().to_string())
            })
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(|e| e.to_string())?;
        ids.insert(variant.into(), set);
    }
    let mut partitions: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
    for row in rows(&out.join("partitions.csv"))? {
        let seen = partitions
            .entry(row["config"].clone())
            .or_default()
            .insert(row["id"].clone(), row["retained"] == "1");
        ensure!(
            seen.is_none(),
            "{} listed twice in {}",
            row["id"],
            row["config"]
        );
    }

    let sweep_rows = rows(&out.join("sweep.csv"))?;
    ensure!(
        sweep_rows.len() == 24,
        "sweep has {} rows",
        sweep_rows.len()
    );
    let mut curves: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in &sweep_rows {
        if row["status"] != "ok" {
            continue;
        }
        let name = &row["config"];
        let universe = &ids[&row["enhancement"]];
        let part = partitions
            .get(name)
            .ok_or_else(|| format!("{name}: no partition"))?;
        let listed: BTreeSet<String> = part.keys().cloned().collect();
        ensure!(
            &listed == universe,
            "{name}: partition does not cover the input"
        );
        let kept = part.values().filter(|k| **k).count();
        let (pc, rc, ec) = (
            num(row, "processed_count")?,
            num(row, "retained_count")?,
            num(row, "eliminated_count")?,
        );
        let (ph, rh, eh) = (
            num(row, "processed_hours")?,
            num(row, "retained_hours")?,
            num(row, "eliminated_hours")?,
        );
        ensure!(
            pc as usize == universe.len() && rc as usize == kept && rc + ec == pc,
            "{name}: counts {rc} + {ec} != {pc}"
        );
        ensure!(
            (rh + eh - ph).abs() <= 1e-9 * ph.max(1.0),
            "{name}: hours {rh} + {eh} != {ph}"
        );
        curves
            .entry((row["enhancement"].clone(), row["filter_metric"].clone()))
            .or_default()
            .push((num(row, "threshold")?, rh));
    }
    for ((variant, metric), mut curve) in curves {
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        ensure!(
            curve.windows(2).all(|w| w[1].1 <= w[0].1),
            "{variant}/{metric}: retained hours not monotone {curve:?}"
        );
    }
    within_time(
        start,
        Duration::from_secs(300),
        format!(
            "{scored}/24 configs scored, partitions valid, hours monotone; {}",
            steps.join(", ")
        ),
    )
}

fn sensitivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let values: Vec<f64> = (0..10_000).map(|_| rng.random_range(1.0..5.0)).collect();
    let report = sweep::sensitivity_of_values(MetricKind::MosNisqa, &values, &[3.0, 3.1], 0.1)
        .map_err(|e| e.to_string())?;
    let row = &report.rows[0];
    let s = row.sensitivity.ok_or("nothing retained at 3.0")?;
    ensure!(
        (row.retained_fraction - 0.5).abs() <= 0.02,
        "retained fraction {}",
        row.retained_fraction
    );
    ensure!((s - 0.05).abs() <= 0.01, "sensitivity {s}");
    Ok(format!(
        "retained fraction {:.4}, sensitivity {s:.4}",
        row.retained_fraction
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("score equations", equations),
        ("ranking table", table2),
        ("identity invariant", identity),
        ("WADA-SNR oracle", wada),
        ("reverberation oracle", reverb),
        ("F0 oracle", f0),
        ("MCD", mcd),
        ("TPE", tpe_search),
        ("end-to-end sweep", end_to_end),
        ("filter sensitivity", sensitivity),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or("panic".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): pass {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
