//! Acceptance suite: one test per shipped correctness criterion, each
//! printing a pass line with its measured margin. Tolerances are pinned
//! in the assertions.

mod common;

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use common::{pairs_to_seconds, MsBitmap};
use tempokit::dattn::check::{
    central_difference_gradients, mean_alpha_v, random_sequence, SeqShape,
};
use tempokit::dattn::{
    alpha_weights, debiased_cross_attention, decomposed_adaptive, fixed_loss_and_gradients,
    lse_score, reference_attention, v2v_rows, CountMode, Mat, Modality, PositionalScheme,
    ProjectionWeights, TokenTimeline, V2vGranularity,
};
use tempokit::intervals::{score, MetricKind, RangeSet, SampleScores};
use tempokit::metrics::{
    auc, curve, evaluate, report, DurationBucket, QueryFormat, QueryModality, QueryRecord,
};
use tempokit::parsers::{
    frames_to_time, parse_frame_ranges, parse_timestamps, FrameIndexBase, FrameTimebase,
};
use tempokit::postproc::{
    classify_format, confidence_rule, default_blocklist, generality_rule, merge_rule, style_rule,
    CandidateQuery, CandidateSource, FormatHeuristics,
};
use tempokit::synthgen::{
    assemble_visual, emit_tasks, plan_sliding_window, splice_audio, AudioClip, Objective,
    SlideDirection, SlidingWindowParams, StartCorner, VisualItem,
};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Criterion 1: α-adaptive decomposition reproduces monolithic causal
/// attention within 1e-10 over 100 random seeds (d ∈ {8,16,32}, N ≤ 64,
/// M ≤ 32) in under 10 seconds.
#[test]
fn criterion_01_decomposition_identity() {
    let start = Instant::now();
    let dims = [8usize, 16, 32];
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = dims[(seed as usize) % dims.len()];
        let shape = SeqShape {
            d,
            n_visual: rng.random_range(0..=64),
            tokens_per_frame: rng.random_range(1..=8),
            n_audio: 0,
            tokens_per_chunk: 1,
            n_text: rng.random_range(1..=32),
        };
        let seq = random_sequence(&shape, &mut rng);
        let weights = ProjectionWeights::random(d, &mut rng, 0.5 / (d as f64).sqrt());
        for t in seq.indices_of(Modality::Text) {
            let got = decomposed_adaptive(t, &seq, &weights).unwrap();
            let mut keys = Mat::zeros(t + 1, d);
            let mut vals = Mat::zeros(t + 1, d);
            for j in 0..=t {
                keys.row_mut(j)
                    .copy_from_slice(&weights.wk.matvec(seq.embedding(j)));
                vals.row_mut(j)
                    .copy_from_slice(&weights.wv.matvec(seq.embedding(j)));
            }
            let q = weights.wq.matvec(seq.embedding(t));
            let want = reference_attention(&q, &keys, &vals).unwrap();
            worst = worst.max(max_abs_diff(&got, &want));
        }
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-10, "max abs diff {worst:e}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS criterion 01: decomposition identity, max |diff| = {worst:.3e}, {elapsed:?}");
}

/// Criterion 2: alpha_v + alpha_t = 1 within 1e-15 over 10^4 random
/// score pairs; ±inf sentinels map to exact {0, 1}.
#[test]
fn criterion_02_alpha_complement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s_v: f64 = rng.random_range(-50.0..50.0);
        let s_t: f64 = rng.random_range(-50.0..50.0);
        let a = alpha_weights(s_v, s_t).unwrap();
        worst = worst.max((a.alpha_v() + a.alpha_t() - 1.0).abs());
    }
    assert!(worst <= 1e-15, "max deviation {worst:e}");
    for (s_v, s_t, want) in [
        (f64::NEG_INFINITY, 0.7, (0.0, 1.0)),
        (0.7, f64::NEG_INFINITY, (1.0, 0.0)),
        (f64::INFINITY, 0.7, (1.0, 0.0)),
        (0.7, f64::INFINITY, (0.0, 1.0)),
    ] {
        let a = alpha_weights(s_v, s_t).unwrap();
        assert_eq!((a.alpha_v(), a.alpha_t()), want, "sentinel ({s_v},{s_t})");
    }
    println!("PASS criterion 02: alpha complement, max |alpha_v+alpha_t-1| = {worst:.3e}");
}

/// Criterion 3: analytic gradients through the fixed-α decomposition
/// match central finite differences (h = 1e-5) within 1e-6 relative
/// error on every parameter of a d = 8 layer, in under 30 seconds.
#[test]
fn criterion_03_gradient_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let shape = SeqShape {
        d: 8,
        n_visual: 6,
        tokens_per_frame: 3,
        n_audio: 4,
        tokens_per_chunk: 2,
        n_text: 5,
    };
    let seq = random_sequence(&shape, &mut rng);
    let weights = ProjectionWeights::random(8, &mut rng, 0.35);
    let coeffs: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = seq.len() - 1;
    let (_, analytic) = fixed_loss_and_gradients(t, &seq, &weights, &coeffs).unwrap();
    let numeric = central_difference_gradients(t, &seq, &weights, &coeffs, 1e-5);
    let mut worst_rel: f64 = 0.0;
    let mut checked = 0usize;
    for (name, a, n) in [
        ("wq", &analytic.wq, &numeric.wq),
        ("wk", &analytic.wk, &numeric.wk),
        ("wv", &analytic.wv, &numeric.wv),
        ("wo", &analytic.wo, &numeric.wo),
    ] {
        for (av, nv) in a.data().iter().zip(n.data()) {
            let denom = av.abs().max(nv.abs());
            let diff = (av - nv).abs();
            assert!(
                diff <= 1e-6 * denom || diff <= 1e-9,
                "{name}: analytic {av} vs numeric {nv}"
            );
            if denom > 0.0 {
                worst_rel = worst_rel.max(diff / denom);
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(checked, 4 * 8 * 8);
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 03: gradients on {checked} parameters, max rel err = {worst_rel:.3e}, {elapsed:?}"
    );
}

fn measured_v2v_ops(n_frames: usize, tokens_per_frame: usize, mode: CountMode) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = SeqShape {
        d: 4,
        n_visual: n_frames * tokens_per_frame,
        tokens_per_frame,
        n_audio: 0,
        tokens_per_chunk: 1,
        n_text: 0,
    };
    let seq = random_sequence(&shape, &mut rng);
    let weights = ProjectionWeights::random(4, &mut rng, 0.3);
    v2v_rows(&seq, &weights, Modality::Visual, mode, V2vGranularity::PerFrame)
        .unwrap()
        .score_ops
}

/// Criterion 4: measured score-op counts — diagonal attention doubles
/// (±5%) from 512 to 1024 frames; full attention quadruples (±5%).
#[test]
fn criterion_04_linear_complexity_scaling() {
    let tokens_per_frame = 4;
    let diag_small = measured_v2v_ops(512, tokens_per_frame, CountMode::Diagonal);
    let diag_large = measured_v2v_ops(1024, tokens_per_frame, CountMode::Diagonal);
    let diag_ratio = diag_large as f64 / diag_small as f64;
    assert!(
        (diag_ratio - 2.0).abs() <= 0.1,
        "diagonal ratio {diag_ratio}"
    );
    let full_small = measured_v2v_ops(512, tokens_per_frame, CountMode::Full);
    let full_large = measured_v2v_ops(1024, tokens_per_frame, CountMode::Full);
    let full_ratio = full_large as f64 / full_small as f64;
    assert!((full_ratio - 4.0).abs() <= 0.2, "full ratio {full_ratio}");
    println!(
        "PASS criterion 04: 512→1024 frames, diagonal ops {diag_small}→{diag_large} (×{diag_ratio:.3}), full ops {full_small}→{full_large} (×{full_ratio:.3})"
    );
}

/// Criterion 5: 400 tokens/frame over 3600 s at 1 fps is exactly
/// 1,440,000 visual tokens, through both the op counter and the token
/// span arithmetic.
#[test]
fn criterion_05_token_arithmetic() {
    let tl = TokenTimeline::new(1.0, 400, 25).unwrap();
    assert_eq!(tl.visual_token_count(3600.0).unwrap(), 1_440_000);
    let (visual, _) = tl.tokens_for_time(0.0, 3600.0).unwrap();
    assert_eq!(visual.len(), 1_440_000);
    assert_eq!(
        tl.op_count(3600.0, CountMode::Diagonal).unwrap(),
        3600 * 400 * 400
    );
    assert_eq!(
        tl.op_count(3600.0, CountMode::Full).unwrap(),
        1_440_000u128 * 1_440_000u128
    );
    assert_eq!(
        tl.op_count(7200.0, CountMode::Diagonal).unwrap(),
        2 * tl.op_count(3600.0, CountMode::Diagonal).unwrap()
    );
    println!("PASS criterion 05: token arithmetic reproduces N = 1,440,000 exactly");
}

/// Criterion 6: the debiased text-token output is bit-identical under a
/// +1000 shift of all visual and audio position indices, 20 seeds.
#[test]
fn criterion_06_debias_invariance() {
    let rope = PositionalScheme::rotary();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let shape = SeqShape {
            d: 16,
            n_visual: rng.random_range(1..=16),
            tokens_per_frame: 4,
            n_audio: rng.random_range(1..=8),
            tokens_per_chunk: 2,
            n_text: rng.random_range(1..=8),
        };
        let mut seq = random_sequence(&shape, &mut rng);
        let weights = ProjectionWeights::random(16, &mut rng, 0.25);
        let texts = seq.indices_of(Modality::Text);
        let before: Vec<Vec<f64>> = texts
            .iter()
            .map(|&t| debiased_cross_attention(t, &seq, &weights, rope).unwrap())
            .collect();
        seq.shift_positions(Modality::Visual, 1000);
        seq.shift_positions(Modality::Audio, 1000);
        for (&t, want) in texts.iter().zip(&before) {
            let after = debiased_cross_attention(t, &seq, &weights, rope).unwrap();
            assert!(
                after.iter().zip(want).all(|(a, b)| a.to_bits() == b.to_bits()),
                "seed {seed}: output moved under position shift"
            );
        }
    }
    println!("PASS criterion 06: debias invariance bit-identical over 20 seeds");
}

/// Criterion 7: 1000 random multi-span pairs on the 1 ms grid —
/// intersect and union agree exactly with the per-millisecond bitmap
/// oracle, and scores match the oracle's integer-count ratios within
/// 1e-12. Runs in under 5 seconds.
#[test]
fn criterion_07_interval_oracle_equivalence() {
    let start = Instant::now();
    let horizon_ms = 60_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random_pairs = |max_ranges: usize, rng: &mut ChaCha8Rng| -> Vec<(u64, u64)> {
        let n = rng.random_range(1..=max_ranges);
        (0..n)
            .map(|_| {
                let s = rng.random_range(0..horizon_ms - 1);
                let len = rng.random_range(1..=10_000u64);
                (s, (s + len).min(horizon_ms))
            })
            .collect()
    };
    for sample in 0..1000 {
        let pred_ms = random_pairs(6, &mut rng);
        let gt_ms = random_pairs(4, &mut rng);
        let pred = RangeSet::normalize(&pairs_to_seconds(&pred_ms), 0.0).unwrap();
        let gt = RangeSet::normalize(&pairs_to_seconds(&gt_ms), 0.0).unwrap();
        let pred_bm = MsBitmap::from_ms_pairs(&pred_ms, horizon_ms);
        let gt_bm = MsBitmap::from_ms_pairs(&gt_ms, horizon_ms);

        // Normalization, intersection, and union agree exactly.
        assert_eq!(pred.to_pairs(), pred_bm.runs_seconds(), "sample {sample}");
        assert_eq!(gt.to_pairs(), gt_bm.runs_seconds(), "sample {sample}");
        let inter_bm = pred_bm.and(&gt_bm);
        let union_bm = pred_bm.or(&gt_bm);
        assert_eq!(pred.intersect(&gt).to_pairs(), inter_bm.runs_seconds());
        assert_eq!(pred.union(&gt).to_pairs(), union_bm.runs_seconds());

        // Scores match the oracle's exact integer ratios.
        let s = score(&pred, &gt);
        let i = inter_bm.count_ms() as f64;
        let u = union_bm.count_ms() as f64;
        let p = pred_bm.count_ms() as f64;
        let g = gt_bm.count_ms() as f64;
        assert!((s.precision - i / p).abs() <= 1e-12);
        assert!((s.recall - i / g).abs() <= 1e-12);
        assert!((s.iou - i / u).abs() <= 1e-12);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("PASS criterion 07: 1000 samples match the millisecond bitmap oracle, {elapsed:?}");
}

/// Criterion 8: AUC at grid_n = 1001 tracks the plain mean within 1e-3
/// for 50 random score multisets, per metric.
#[test]
fn criterion_08_auc_mean_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=200);
        let scores: Vec<SampleScores> = (0..n)
            .map(|_| SampleScores {
                precision: rng.random_range(0.0..=1.0),
                recall: rng.random_range(0.0..=1.0),
                iou: rng.random_range(0.0..=1.0),
                degenerate: false,
            })
            .collect();
        for metric in MetricKind::ALL {
            let mean =
                scores.iter().map(|s| s.metric(metric)).sum::<f64>() / scores.len() as f64;
            let a = auc(&curve(&scores, metric, 1001).unwrap()).unwrap();
            let err = (a - mean).abs();
            worst = worst.max(err);
            assert!(err <= 1e-3, "{} deviates by {err}", metric.label());
        }
    }
    println!("PASS criterion 08: AUC–mean identity, max |auc - mean| = {worst:.3e}");
}

/// Criterion 9: a perfect 10-query fixture scores exactly 1.0 on all
/// three AUC metrics.
#[test]
fn criterion_09_perfect_prediction_fixture() {
    let queries: Vec<QueryRecord> = (0..10)
        .map(|i| {
            QueryRecord::new(
                format!("q{i:02}"),
                format!("v{i:02}"),
                format!("query {i}"),
                QueryFormat::ALL[i % 3],
                QueryModality::ALL[i % 3],
                100.0 + i as f64 * 700.0,
                RangeSet::normalize(&[(5.0 + i as f64, 20.0 + i as f64), (50.0, 60.0)], 0.0)
                    .unwrap(),
            )
            .unwrap()
        })
        .collect();
    let preds: HashMap<String, RangeSet> = queries
        .iter()
        .map(|q| (q.query_id.clone(), q.gt.clone()))
        .collect();
    let evaluated = evaluate(&queries, &preds).unwrap();
    let rep = report(&evaluated, 1001).unwrap();
    assert_eq!(rep.overall.precision_auc, 1.0);
    assert_eq!(rep.overall.recall_auc, 1.0);
    assert_eq!(rep.overall.iou_auc, 1.0);
    println!("PASS criterion 09: perfect fixture gives exact unit AUC on all three metrics");
}

/// Criterion 10: duration bucketing at the documented boundaries, plus
/// a fixture reproducing the published per-bucket query counts.
#[test]
fn criterion_10_duration_bucketing() {
    use DurationBucket::*;
    assert_eq!(DurationBucket::for_duration(3871.0).unwrap(), UltraLong);
    for (value, want) in [
        (59.999, UltraShort),
        (60.0, Short),
        (600.0, Medium),
        (1800.0, Long),
        (3600.0, UltraLong),
    ] {
        assert_eq!(DurationBucket::for_duration(value).unwrap(), want, "{value}");
    }

    let counts = [183usize, 439, 427, 396, 153];
    let bucket_durations = [30.0, 300.0, 900.0, 2400.0, 4000.0];
    let mut queries = Vec::new();
    for (bucket_idx, &count) in counts.iter().enumerate() {
        for i in 0..count {
            queries.push(
                QueryRecord::new(
                    format!("b{bucket_idx}_q{i:04}"),
                    "v",
                    "query",
                    QueryFormat::ALL[i % 3],
                    QueryModality::ALL[i % 3],
                    bucket_durations[bucket_idx],
                    RangeSet::normalize(&[(1.0, 9.0)], 0.0).unwrap(),
                )
                .unwrap(),
            );
        }
    }
    let preds: HashMap<String, RangeSet> = queries
        .iter()
        .map(|q| (q.query_id.clone(), q.gt.clone()))
        .collect();
    let rep = report(&evaluate(&queries, &preds).unwrap(), 11).unwrap();
    let duration_counts: Vec<usize> = rep
        .rows
        .iter()
        .filter(|r| r.axis == tempokit::metrics::SliceAxis::Duration)
        .map(|r| r.stats.n_queries)
        .collect();
    assert_eq!(duration_counts, counts.to_vec());
    assert_eq!(rep.overall.n_queries, 1598);
    println!("PASS criterion 10: bucket boundaries and the 183/439/427/396/153 row reproduce");
}

#[derive(Debug, Deserialize)]
struct CorpusEntry {
    kind: String,
    input: String,
    duration_s: f64,
    #[serde(default)]
    fps: Option<f64>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    n_frames: Option<u64>,
    #[serde(default)]
    index_base: Option<String>,
    #[serde(default)]
    expect_ranges: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    expect_error: Option<bool>,
}

/// Criterion 11: every corpus string parses to its expected output, and
/// 10^5 fuzz inputs crash nothing.
#[test]
fn criterion_11_parser_corpus_and_fuzz() {
    let corpus: Vec<CorpusEntry> =
        serde_json::from_str(include_str!("data/parser_corpus.json")).unwrap();
    assert!(corpus.len() >= 30, "corpus holds {} entries", corpus.len());
    for (idx, entry) in corpus.iter().enumerate() {
        let result = match entry.kind.as_str() {
            "frames" => {
                let timebase = match entry.mode.as_deref() {
                    Some("uniform") => FrameTimebase::Uniform {
                        n_frames: entry.n_frames.expect("uniform entries carry n_frames"),
                    },
                    _ => FrameTimebase::Dense {
                        fps: entry.fps.unwrap_or(1.0),
                    },
                };
                let index_base = match entry.index_base.as_deref() {
                    Some("one") => FrameIndexBase::One,
                    _ => FrameIndexBase::Zero,
                };
                parse_frame_ranges(&entry.input).and_then(|frames| {
                    frames_to_time(&frames, timebase, index_base, entry.duration_s)
                })
            }
            "clock" => parse_timestamps(&entry.input, entry.duration_s),
            other => panic!("unknown corpus kind {other}"),
        };
        match (&entry.expect_ranges, entry.expect_error.unwrap_or(false)) {
            (Some(want), false) => {
                let got = result
                    .unwrap_or_else(|e| panic!("entry {idx} ({:?}) failed: {e}", entry.input));
                assert_eq!(&got.ranges.to_pairs(), want, "entry {idx} ({:?})", entry.input);
            }
            (None, true) => {
                assert!(result.is_err(), "entry {idx} ({:?}) should fail", entry.input);
            }
            _ => panic!("entry {idx} must specify exactly one of expect_ranges/expect_error"),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100_000 {
        let len = rng.random_range(0..80);
        let bytes: Vec<u8> = (0..len).map(|_| rng.random::<u8>()).collect();
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_timestamps(&text, 100.0);
        let _ = parse_frame_ranges(&text);
    }
    println!(
        "PASS criterion 11: {} corpus entries match and 10^5 fuzz inputs parse without crashing",
        corpus.len()
    );
}

/// Criterion 12: the four post-processing rules reproduce their stock
/// examples and the query exemplars classify to their stated formats.
#[test]
fn criterion_12_postprocessing_rules() {
    let candidate = |ranges: &[(f64, f64)], conf: f64, text: &str| {
        CandidateQuery::new(text, ranges, conf, CandidateSource::Mixed).unwrap()
    };

    // Rule 1: merge ranges separated by at most 0.5 s.
    let merged = merge_rule(&candidate(&[(0.0, 5.0), (5.3, 9.0)], 0.95, "q"), 0.5);
    assert_eq!(merged.ranges.to_pairs(), vec![(0.0, 9.0)]);
    let unmerged = merge_rule(&candidate(&[(0.0, 5.0), (6.0, 9.0)], 0.95, "q"), 0.5);
    assert_eq!(unmerged.ranges.len(), 2);

    // Rule 2: confidence below 0.9 is discarded.
    assert!(!confidence_rule(&candidate(&[(0.0, 1.0)], 0.89, "q"), 0.9));
    assert!(confidence_rule(&candidate(&[(0.0, 1.0)], 0.90, "q"), 0.9));
    assert!(confidence_rule(&candidate(&[(0.0, 1.0)], 1.0, "q"), 0.9));

    // Rule 3: more than 10 merged ranges is too general.
    let spans = |n: usize| -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64 * 10.0, i as f64 * 10.0 + 1.0)).collect()
    };
    assert!(!generality_rule(&candidate(&spans(11), 0.95, "q"), 10));
    assert!(generality_rule(&candidate(&spans(10), 0.95, "q"), 10));

    // Rule 4: stock machine-style templates are dropped.
    let blocklist = default_blocklist();
    assert!(!style_rule(
        &candidate(&[(0.0, 1.0)], 0.95, "The video concludes with a sunset."),
        &blocklist
    ));
    assert!(!style_rule(
        &candidate(&[(0.0, 1.0)], 0.95, "In the closing moments, the band bows."),
        &blocklist
    ));
    assert!(style_rule(
        &candidate(&[(0.0, 1.0)], 0.95, "a man riding a bike"),
        &blocklist
    ));

    // Query format exemplars.
    let h = FormatHeuristics::default();
    let expectations = [
        ("love", QueryFormat::Keyword),
        ("coffee making process", QueryFormat::Keyword),
        ("washing machine", QueryFormat::Keyword),
        ("a man riding a bike", QueryFormat::Phrase),
        ("person in deep thought", QueryFormat::Phrase),
        ("enjoying a swim in the pool", QueryFormat::Phrase),
        (
            "The majestic presence of a volcano surrounded by lush vegetation and shrouded in clouds",
            QueryFormat::Sentence,
        ),
    ];
    for (text, want) in expectations {
        assert_eq!(classify_format(text, &h).unwrap(), want, "{text:?}");
    }
    println!("PASS criterion 12: all four rules and the format exemplars reproduce");
}

/// Criterion 13: synthetic planning is byte-identical per seed, 10^4
/// random crop schedules stay inside their images, and localization
/// targets score IoU = 1 against their own segments via the metrics
/// path.
#[test]
fn criterion_13_synthetic_determinism_and_safety() {
    // Byte-identical reruns.
    let items: Vec<VisualItem> = (0..8)
        .map(|i| VisualItem {
            image_id: format!("img{i}"),
            caption: format!("synthetic scene number {i}"),
            width: 1280,
            height: 720,
        })
        .collect();
    let visual_a = serde_json::to_vec(&assemble_visual(&items, 99, 1.0).unwrap()).unwrap();
    let visual_b = serde_json::to_vec(&assemble_visual(&items, 99, 1.0).unwrap()).unwrap();
    assert_eq!(visual_a, visual_b);
    let clips: Vec<AudioClip> = (0..8)
        .map(|i| AudioClip {
            clip_id: format!("clip{i}"),
            length_s: 2.0 + i as f64 * 1.3,
            caption: format!("sound {i}"),
        })
        .collect();
    let audio_a = serde_json::to_vec(&splice_audio(&clips, 99).unwrap()).unwrap();
    let audio_b = serde_json::to_vec(&splice_audio(&clips, 99).unwrap()).unwrap();
    assert_eq!(audio_a, audio_b);

    // Geometric safety over 10^4 random schedules.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10_000 {
        let image_w = rng.random_range(64..=2048u32);
        let image_h = rng.random_range(64..=2048u32);
        let params = SlidingWindowParams {
            window_w: rng.random_range(1..=image_w),
            window_h: rng.random_range(1..=image_h),
            start_corner: StartCorner::ALL[rng.random_range(0..4)],
            direction: SlideDirection::ALL[rng.random_range(0..4)],
            speed_px_per_frame: rng.random_range(0..=image_w.max(image_h) * 2),
            duration_s: rng.random_range(0.5..=60.0),
        };
        let schedule = plan_sliding_window("img", image_w, image_h, &params, 1.0).unwrap();
        for r in &schedule.rects {
            assert!(r.x + r.w <= image_w && r.y + r.h <= image_h);
        }
    }

    // Localization supervision is self-consistent through the metrics path.
    for seed in 0..20u64 {
        let manifest = assemble_visual(&items, seed, 1.0).unwrap();
        let tasks = emit_tasks(&manifest);
        let locations: Vec<_> = tasks
            .iter()
            .filter(|t| t.objective == Objective::TimestampLocalization)
            .collect();
        assert_eq!(locations.len(), manifest.segments.len());
        for (task, segment) in locations.iter().zip(&manifest.segments) {
            let parsed = parse_timestamps(&task.target, manifest.total_duration_s).unwrap();
            let own = RangeSet::normalize(&[(segment.start_s, segment.end_s)], 0.0).unwrap();
            let s = score(&parsed.ranges, &own);
            assert_eq!(s.iou, 1.0, "seed {seed}, segment {:?}", segment.source_id);
        }
    }
    println!("PASS criterion 13: deterministic plans, 10^4 in-bounds schedules, IoU = 1 round trips");
}

/// Criterion 14: with i.i.d. zero-mean logits, the mean alpha_v over
/// 200 seeds strictly increases across N ∈ {10, 100, 1000} at M = 16.
#[test]
fn criterion_14_alpha_saturation_trend() {
    let means: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| mean_alpha_v(n, 16, 200))
        .collect();
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "means not strictly increasing: {means:?}"
    );
    println!(
        "PASS criterion 14: mean alpha_v {:.4} < {:.4} < {:.4} across N = 10/100/1000",
        means[0], means[1], means[2]
    );
}

/// Numeric-stability companion to the kernel criteria: extreme logits
/// stay finite through the log-sum-exp and reference paths.
#[test]
fn stability_extreme_logits_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let keys = Mat::from_fn(64, 1, |_, _| rng.random_range(-700.0..700.0));
    let vals = Mat::from_fn(64, 1, |_, _| rng.random_range(-1.0..1.0));
    assert!(lse_score(&[1.0], &keys).unwrap().is_finite());
    assert!(reference_attention(&[1.0], &keys, &vals)
        .unwrap()
        .iter()
        .all(|v| v.is_finite()));
}
