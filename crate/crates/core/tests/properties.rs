use std::collections::BTreeSet;

use curate_core::dsp::{self, Alignment, CepstraSequence, F0Track, FramePlan, NUM_CEPSTRA};
use curate_core::scoring::{self, Ranked, ScoreWeights, MCD_REFERENCE_DB};
use curate_core::sidecar::{self, CoveragePolicy, MergeKey, MetricTable};
use curate_core::sweep;
use curate_core::synth;
use curate_core::tpe::{self, ParamKind, ParamSpace, ParamSpec, TpeSettings, TrialRecord};
use curate_core::vad::{self, LengthTarget, Segment, VadParams};
use curate_core::{CorpusSnapshot, MetricKind, Utterance};
use proptest::prelude::*;

fn snapshot_from(name: &str, prefix: &str, durations: &[f64]) -> CorpusSnapshot {
    let utts = durations
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let id = format!("{prefix}{i}");
            Utterance::new(id, format!("src{}", i / 3), 0.5, 0.5 + d, 16_000).unwrap()
        })
        .collect();
    CorpusSnapshot::new(name, utts).unwrap()
}

/// Snapshot carrying every metric needed to score a configuration.
fn scored_snapshot(rows: &[(f64, [f64; 8])]) -> CorpusSnapshot {
    let kinds = [
        MetricKind::Pesq,
        MetricKind::Snr,
        MetricKind::SiSdr,
        MetricKind::T30,
        MetricKind::C50,
        MetricKind::F0Std,
        MetricKind::Mcd,
        MetricKind::MosNisqa,
    ];
    let utts = rows
        .iter()
        .enumerate()
        .map(|(i, (dur, values))| {
            let id = format!("u{i:03}");
            kinds.iter().zip(values).fold(
                Utterance::new(id.clone(), id, 0.0, *dur, 16_000).unwrap(),
                |u, (k, v)| u.with_metric(*k, *v),
            )
        })
        .collect();
    CorpusSnapshot::new("scored", utts).unwrap()
}

fn metric_row() -> impl Strategy<Value = (f64, [f64; 8])> {
    (
        0.5f64..20.0,
        (1.0f64..4.5, 1.0f64..40.0, 1.0f64..30.0, 0.1f64..2.0),
        (1.0f64..30.0, 1.0f64..200.0, 0.0f64..8.0, 1.0f64..5.0),
    )
        .prop_map(|(d, (a, b, c, e), (f, g, h, i))| (d, [a, b, c, e, f, g, h, i]))
}

fn ordered_segments() -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec((0.05f64..6.0, 0.0f64..1.5), 0..40).prop_map(|pairs| {
        let mut t = 0.0;
        pairs
            .into_iter()
            .map(|(len, gap)| {
                t += gap;
                let s = Segment::new(t, t + len);
                t += len;
                s
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hours_are_additive(a in prop::collection::vec(0.1f64..30.0, 0..20), b in prop::collection::vec(0.1f64..30.0, 0..20)) {
        let (x, y) = (snapshot_from("a", "a", &a), snapshot_from("b", "b", &b));
        let joined = x.concat(&y, "ab").unwrap();
        prop_assert!((joined.total_hours() - x.total_hours() - y.total_hours()).abs() < 1e-12);
    }

    #[test]
    fn wada_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let clean = synth::speech_like(1.0, 16_000, 140.0, 0.0, 0.0, &mut rng);
        let noise = synth::white_noise(clean.len(), &mut rng);
        let x = synth::mix_at_snr(&clean, &noise, 10.0).unwrap().samples;
        let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let (a, b) = (dsp::wada_snr(&x, 16_000).unwrap(), dsp::wada_snr(&y, 16_000).unwrap());
        prop_assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn yin_recovers_pure_tones(f in 80.0f64..400.0) {
        let track = dsp::yin_f0(&synth::tone(f, 0.5, 16_000), 16_000, &dsp::YinSettings::default()).unwrap();
        let good = track.voiced().filter(|v| (v / f - 1.0).abs() <= 0.01).count();
        prop_assert!(good as f64 >= 0.9 * track.f0_hz.len() as f64);
    }

    #[test]
    fn mcd_identity_symmetry_sign(a in prop::collection::vec(prop::array::uniform13(-20.0f64..20.0), 1..30), b in prop::collection::vec(prop::array::uniform13(-20.0f64..20.0), 1..30)) {
        let n = a.len().min(b.len());
        let seq = |c: &[[f64; NUM_CEPSTRA]]| CepstraSequence { coeffs: c.to_vec(), plan: FramePlan::default(), sample_rate: 16_000 };
        let (x, y) = (seq(&a[..n]), seq(&b[..n]));
        prop_assert_eq!(dsp::mcd(&x, &x, Alignment::None).unwrap().mean_db, 0.0);
        let xy = dsp::mcd(&x, &y, Alignment::None).unwrap().mean_db;
        let yx = dsp::mcd(&y, &x, Alignment::None).unwrap().mean_db;
        prop_assert!(xy >= 0.0);
        prop_assert!((xy - yx).abs() <= 1e-12 * xy.max(1.0));
        prop_assert!(dsp::mcd(&x, &y, Alignment::Dtw).unwrap().mean_db >= 0.0);
    }

    #[test]
    fn f0_std_ignores_frame_order(mut voiced in prop::collection::vec(prop::option::of(60.0f64..500.0), 2..80), seed in any::<u64>()) {
        prop_assume!(voiced.iter().flatten().count() >= 2);
        let track = |f0_hz: Vec<Option<f64>>| F0Track { f0_hz, fmin_hz: 50.0, fmax_hz: 600.0, hop_s: 0.01, frame_len_s: 0.04 };
        let a = dsp::f0_std(&track(voiced.clone())).unwrap();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        voiced.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let b = dsp::f0_std(&track(voiced)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn merge_is_idempotent_and_keeps_lineage(values in prop::collection::vec(1.0f64..5.0, 1..30)) {
        let durations: Vec<f64> = (0..values.len()).map(|i| 1.0 + i as f64).collect();
        let snap = snapshot_from("raw", "u", &durations);
        let rows = values.iter().enumerate().map(|(i, v)| (None, format!("u{i}"), *v));
        let table = MetricTable::from_rows(MetricKind::MosNisqa, rows).unwrap();
        let once = sidecar::merge(&snap, &table, CoveragePolicy::Strict, MergeKey::UtteranceId).unwrap();
        let twice = sidecar::merge(&once.snapshot, &table, CoveragePolicy::Strict, MergeKey::UtteranceId).unwrap();
        prop_assert_eq!(&once.snapshot, &twice.snapshot);
        prop_assert!(twice.replaced.is_empty());
        for (before, after) in snap.utterances().iter().zip(once.snapshot.utterances()) {
            prop_assert_eq!((&before.id, &before.source_id, before.start_s, before.end_s, before.duration_s),
                            (&after.id, &after.source_id, after.start_s, after.end_s, after.duration_s));
        }
    }

    #[test]
    fn detect_output_is_ordered_and_bounded(seed in 0u64..500, threshold in 0.0f64..30.0, ms in 30.0f64..500.0, sil in 30.0f64..1000.0, pad in 0.0f64..300.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(100..40_000);
        let mut x = synth::white_noise(n, &mut rng);
        for v in x.iter_mut().take(n / 2).skip(n / 4) {
            *v *= 30.0;
        }
        let params = VadParams { threshold_db: threshold, min_speech_ms: ms, min_silence_ms: sil, pad_ms: pad };
        let segs = vad::detect(&x, 16_000, &params);
        let dur = n as f64 / 16_000.0;
        for s in &segs {
            prop_assert!(s.start_s >= 0.0 && s.end_s <= dur + 1e-12 && s.start_s < s.end_s);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end_s < w[1].start_s);
        }
    }

    #[test]
    fn concatenation_respects_limits(segments in ordered_segments(), mean in 2.0f64..10.0, std in 0.0f64..3.0, gap in 0.0f64..1.0, extra in 0.0f64..6.0) {
        let target = LengthTarget { mean_s: mean, std_s: std, max_gap_s: gap, hard_max_s: mean + extra, min_utt_s: 1.0 };
        let groups = vad::concat_to_target(&segments, &target).unwrap();
        let mut used = BTreeSet::new();
        for g in &groups {
            let members = &segments[g.segments.clone()];
            prop_assert!(!members.is_empty());
            let dur = g.extent.duration();
            prop_assert!(dur >= target.min_utt_s);
            prop_assert!(dur <= target.hard_max_s || members.len() == 1);
            prop_assert_eq!(g.extent.start_s, members[0].start_s);
            prop_assert_eq!(g.extent.end_s, members[members.len() - 1].end_s);
            // Accounting identity: speech plus bridged gaps.
            let speech: f64 = members.iter().map(Segment::duration).sum();
            let bridged: f64 = members.windows(2).map(|w| w[1].start_s - w[0].end_s).sum();
            prop_assert!((dur - speech - bridged).abs() < 1e-9);
            prop_assert!(members.windows(2).all(|w| w[1].start_s - w[0].end_s <= target.max_gap_s));
            for i in g.segments.clone() {
                prop_assert!(used.insert(i));
            }
        }
    }

    #[test]
    fn suggestions_stay_in_bounds(specs in prop::collection::vec((0usize..3, -50.0f64..50.0, 0.5f64..60.0), 1..4), seed in any::<u64>(), n in 0usize..30) {
        let params: Vec<ParamSpec> = specs
            .iter()
            .enumerate()
            .map(|(i, (k, lo, width))| {
                let (kind, low, high) = match k {
                    0 => (ParamKind::Uniform, *lo, lo + width),
                    1 => (ParamKind::LogUniform, lo.abs() + 0.01, lo.abs() + 0.01 + width),
                    _ => (ParamKind::Integer, lo.floor(), lo.floor() + width.ceil()),
                };
                ParamSpec::new(format!("p{i}"), kind, low, high).unwrap()
            })
            .collect();
        let space = ParamSpace::new(params).unwrap();
        let settings = TpeSettings { seed, n_startup: 5, ..TpeSettings::default() };
        let run = tpe::optimize(&space, |x| x.iter().map(|v| v.sin()).sum(), n.max(1), &settings).unwrap();
        for t in &run.history {
            prop_assert!(space.contains(&t.params), "{:?}", t.params);
        }
        let again = tpe::optimize(&space, |x| x.iter().map(|v| v.sin()).sum(), n.max(1), &settings).unwrap();
        prop_assert_eq!(&run.history, &again.history);
        let mut best = f64::INFINITY;
        for t in &run.history {
            let next = best.min(t.objective);
            prop_assert!(next <= best);
            best = next;
        }
        prop_assert_eq!(best, run.best.objective);
    }

    #[test]
    fn split_sizes(objectives in prop::collection::vec(prop::sample::select(vec![0.0, 1.0, 2.0, 3.5]), 1..80), gamma in 0.05f64..0.95) {
        let history: Vec<TrialRecord> = objectives
            .iter()
            .enumerate()
            .map(|(index, o)| TrialRecord { index, params: vec![0.5], objective: *o })
            .collect();
        let (good, bad) = tpe::split(&history, gamma);
        prop_assert_eq!(good.len(), ((gamma * history.len() as f64).ceil() as usize).max(1));
        prop_assert_eq!(good.len() + bad.len(), history.len());
    }

    #[test]
    fn identity_configuration_scores_five(rows in prop::collection::vec(metric_row(), 1..25)) {
        let snap = scored_snapshot(&rows);
        let kinds = scoring::required_kinds(false);
        let agg = scoring::aggregate(&snap, &kinds).unwrap();
        let s = scoring::score(&agg, &agg, false, ScoreWeights::default(), MCD_REFERENCE_DB).unwrap();
        prop_assert_eq!((s.dr, s.sq, s.ap, s.sd, s.total), (0.0, 3.0, 2.0, 0.0, 5.0));
    }

    #[test]
    fn dr_ignores_utterance_order(rows in prop::collection::vec(metric_row(), 2..25), keep in 0usize..25) {
        let raw = scored_snapshot(&rows);
        let kept: Vec<_> = rows.iter().take(keep.min(rows.len()).max(1)).cloned().collect();
        let mut reversed = kept.clone();
        reversed.reverse();
        let kinds = [MetricKind::Pesq];
        let r = scoring::aggregate(&raw, &kinds).unwrap();
        let a = scoring::aggregate(&scored_snapshot(&kept), &kinds).unwrap();
        let b = scoring::aggregate(&scored_snapshot(&reversed), &kinds).unwrap();
        let (x, y) = (scoring::score_dr(&r, &a).unwrap(), scoring::score_dr(&r, &b).unwrap());
        prop_assert!((x - y).abs() < 1e-12);
        prop_assert!(x <= 1.0);
    }

    #[test]
    fn ranking_is_sorted_permutation(entries in prop::collection::vec((0.0f64..1.0, 0.0f64..4.0, 0.0f64..3.0, 0.0f64..2.0), 0..30), w in prop::array::uniform4(0.0f64..3.0)) {
        prop_assume!(w.iter().any(|v| *v > 0.0));
        let weights = ScoreWeights::new(w[0], w[1], w[2], w[3]).unwrap();
        let input: Vec<Ranked> = entries
            .iter()
            .enumerate()
            .map(|(i, (dr, sq, ap, sd))| Ranked { config: format!("c{i}"), scores: scoring::composite(*dr, *sq, *ap, *sd, weights) })
            .collect();
        for r in &input {
            let s = r.scores;
            prop_assert!((s.total - (w[0] * s.dr + w[1] * s.sq + w[2] * s.ap + w[3] * s.sd)).abs() <= 1e-12);
            let unit = scoring::composite(s.dr, s.sq, s.ap, s.sd, ScoreWeights::default());
            prop_assert!((unit.total - (s.dr + s.sq + s.ap + s.sd)).abs() <= 1e-12);
        }
        let ranked = scoring::rank(input.clone());
        let a: BTreeSet<String> = input.iter().map(|r| r.config.clone()).collect();
        let b: BTreeSet<String> = ranked.iter().map(|r| r.config.clone()).collect();
        prop_assert_eq!(a, b);
        prop_assert!(ranked.windows(2).all(|p| p[0].scores.total <= p[1].scores.total));
    }

    #[test]
    fn filter_partitions_and_monotone_hours(rows in prop::collection::vec(metric_row(), 1..40), mut thresholds in prop::collection::vec(1.0f64..5.0, 2..8)) {
        let snap = scored_snapshot(&rows);
        thresholds.sort_by(f64::total_cmp);
        let mut prev = f64::INFINITY;
        for t in thresholds {
            let out = sweep::apply_filter(&snap, MetricKind::MosNisqa, t).unwrap();
            out.verify(&snap).unwrap();
            let hours = out.retained.total_hours();
            prop_assert!(hours <= prev + 1e-12);
            prev = hours;
        }
    }

    #[test]
    fn mixing_hits_target(seed in any::<u64>(), snr in -20.0f64..40.0, n in 16usize..4000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let clean = synth::white_noise(n, &mut rng);
        let noise = synth::white_noise(n / 2 + 1, &mut rng);
        let mix = synth::mix_at_snr(&clean, &noise, snr).unwrap();
        let residual: Vec<f64> = mix.samples.iter().zip(&clean).map(|(m, c)| m - c).collect();
        let measured = 10.0 * (synth::power(&clean) / synth::power(&residual)).log10();
        prop_assert!((measured - snr).abs() < 1e-9);
    }
}

#[test]
fn pure_operations_repeat_bit_exactly() {
    let x = synth::vibrato_tone(180.0, 8.0, 5.0, 1.0, 16_000);
    let settings = dsp::YinSettings::default();
    assert_eq!(
        dsp::yin_f0(&x, 16_000, &settings).unwrap(),
        dsp::yin_f0(&x, 16_000, &settings).unwrap()
    );
    assert_eq!(
        dsp::wada_snr(&x, 16_000).unwrap().to_bits(),
        dsp::wada_snr(&x, 16_000).unwrap().to_bits()
    );
    let plan = FramePlan::default();
    assert_eq!(
        dsp::mfcc(&x, 16_000, plan).unwrap(),
        dsp::mfcc(&x, 16_000, plan).unwrap()
    );
}

#[test]
fn reverb_oracle_holds_for_fixed_seeds() {
    for t60 in [0.2, 0.5, 1.0] {
        for seed in 0..5 {
            let rir = synth::exp_rir(t60, 1.5 * t60, 16_000, seed).unwrap();
            let t30 = synth::schroeder_t30(&rir, 16_000).unwrap();
            assert!(
                t30 >= 0.95 * t60 && t30 <= 1.05 * t60,
                "{t60} {seed}: {t30}"
            );
        }
    }
}

#[test]
fn mos_proxy_strictly_increasing() {
    let grid: Vec<f64> = (0..=3500).map(|i| -5.0 + i as f64 * 0.01).collect();
    for w in grid.windows(2).filter(|w| w[0] > -5.0 && w[1] < 30.0) {
        assert!(synth::mos_proxy(w[1]) > synth::mos_proxy(w[0]));
    }
}
