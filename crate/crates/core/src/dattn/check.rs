//! Self-contained invariant suite for the decomposed attention kernels:
//! decomposition equivalence, α algebra, gradient correctness, debias
//! invariance, block locality, numeric stability, and the measured
//! score-op scaling behind the linear-complexity claim.
//!
//! The suite never panics on failure; each check reports pass/fail with
//! a diagnostic so the CLI can print a table and choose an exit code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::grad::fixed_loss_and_gradients;
use super::kernel::{
    alpha_weights, causal_reference_layer, debiased_cross_attention, decomposed_adaptive,
    decomposed_fixed, decomposed_fixed_parts, layer_forward, lse_score, reference_attention,
    v2v_rows,
};
use super::linalg::{dot, max_abs_diff, Mat};
use super::rope::PositionalScheme;
use super::timeline::{CountMode, TokenTimeline};
use super::{
    LayerConfig, LayerGradients, Modality, ProjectionWeights, TextMode, TokenSequence,
    V2vGranularity,
};

/// Shape of a randomly generated token sequence.
#[derive(Debug, Clone, Copy)]
pub struct SeqShape {
    pub d: usize,
    pub n_visual: usize,
    pub tokens_per_frame: usize,
    pub n_audio: usize,
    pub tokens_per_chunk: usize,
    pub n_text: usize,
}

/// Gaussian-embedded sequence in canonical `[visual, audio, text]`
/// layout with per-frame / per-chunk segment ids and global positions.
pub fn random_sequence(shape: &SeqShape, rng: &mut ChaCha8Rng) -> TokenSequence {
    let n = shape.n_visual + shape.n_audio + shape.n_text;
    let emb = Mat::from_fn(n, shape.d, |_, _| rng.sample(StandardNormal));
    let mut modality = Vec::with_capacity(n);
    let mut segment = Vec::with_capacity(n);
    for i in 0..shape.n_visual {
        modality.push(Modality::Visual);
        segment.push((i / shape.tokens_per_frame.max(1)) as u32);
    }
    for i in 0..shape.n_audio {
        modality.push(Modality::Audio);
        segment.push((i / shape.tokens_per_chunk.max(1)) as u32);
    }
    for _ in 0..shape.n_text {
        modality.push(Modality::Text);
        segment.push(0);
    }
    let position = (0..n as u64).collect();
    TokenSequence::new(emb, modality, segment, position).expect("generated layout is canonical")
}

/// Central-difference gradients of the fixed-α loss (step `h`) for each
/// projection matrix, via repeated forward evaluation through the
/// kernel path.
pub fn central_difference_gradients(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    loss_coeffs: &[f64],
    h: f64,
) -> LayerGradients {
    let loss_of = |w: &ProjectionWeights| {
        let attn = decomposed_fixed(t_index, seq, w).expect("forward succeeds");
        dot(loss_coeffs, &w.wo.matvec(&attn))
    };
    let d = weights.d_model();
    let mut grads = Vec::new();
    for which in 0..4 {
        let mut g = Mat::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let perturb = |delta: f64| {
                    let mut w = weights.clone();
                    let m = match which {
                        0 => &mut w.wq,
                        1 => &mut w.wk,
                        2 => &mut w.wv,
                        _ => &mut w.wo,
                    };
                    m.set(r, c, m.get(r, c) + delta);
                    loss_of(&w)
                };
                g.set(r, c, (perturb(h) - perturb(-h)) / (2.0 * h));
            }
        }
        grads.push(g);
    }
    let mut it = grads.into_iter();
    LayerGradients {
        wq: it.next().unwrap(),
        wk: it.next().unwrap(),
        wv: it.next().unwrap(),
        wo: it.next().unwrap(),
    }
}

/// Optional corruption injected into a check, to prove the suite detects
/// real faults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    /// Flip the sign of the first component of every decomposed output
    /// before comparing against the monolithic reference.
    DecompositionSignFlip,
}

/// Suite configuration.
#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seeds: u64,
    pub dims: Vec<usize>,
    pub text_mode: TextMode,
    pub fault: Option<FaultInjection>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seeds: 100,
            dims: vec![8, 16, 32],
            text_mode: TextMode::Fixed,
            fault: None,
        }
    }
}

/// One pass/fail line of the suite.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

/// All outcomes, in execution order.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| !o.passed)
    }

    /// Fixed-width pass/fail table.
    pub fn to_table(&self) -> String {
        let width = self
            .outcomes
            .iter()
            .map(|o| o.name.len())
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for o in &self.outcomes {
            let status = if o.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "{status}  {:width$}  {}\n",
                o.name,
                o.details,
                width = width
            ));
        }
        out
    }
}

/// Runs every invariant check and collects the outcomes.
pub fn run_suite(config: &CheckConfig) -> SuiteReport {
    let outcomes = vec![
        check_decomposition_identity(config),
        check_alpha_complement(),
        check_gradient_correctness(),
        check_debias_invariance(),
        check_block_locality(),
        check_numeric_stability(),
        check_diagonal_op_scaling(),
        check_full_op_scaling(),
        check_token_arithmetic(),
        check_text_only_equivalence(config),
        check_alpha_saturation(),
        check_fixed_sum_definition(),
    ];
    SuiteReport { outcomes }
}

fn check_decomposition_identity(config: &CheckConfig) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut worst_seed = 0;
    for seed in 0..config.seeds.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.dims[(seed as usize) % config.dims.len().max(1)];
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
            let mut got = match decomposed_adaptive(t, &seq, &weights) {
                Ok(v) => v,
                Err(e) => {
                    return CheckOutcome {
                        name: "decomposition-identity",
                        passed: false,
                        details: format!("seed {seed}: {e}"),
                    }
                }
            };
            if config.fault == Some(FaultInjection::DecompositionSignFlip) {
                got[0] = -got[0];
            }
            let ctx: Vec<usize> = (0..=t).collect();
            let mut keys = Mat::zeros(ctx.len(), d);
            let mut vals = Mat::zeros(ctx.len(), d);
            for (slot, &j) in ctx.iter().enumerate() {
                keys.row_mut(slot)
                    .copy_from_slice(&weights.wk.matvec(seq.embedding(j)));
                vals.row_mut(slot)
                    .copy_from_slice(&weights.wv.matvec(seq.embedding(j)));
            }
            let q = weights.wq.matvec(seq.embedding(t));
            let want = reference_attention(&q, &keys, &vals).expect("prefix is nonempty");
            let diff = max_abs_diff(&got, &want);
            if diff > worst {
                worst = diff;
                worst_seed = seed;
            }
        }
    }
    CheckOutcome {
        name: "decomposition-identity",
        passed: worst < 1e-10,
        details: format!(
            "max |adaptive - monolithic| = {worst:.3e} over {} seeds (worst seed {worst_seed}, tol 1e-10)",
            config.seeds
        ),
    }
}

fn check_alpha_complement() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1FA);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s_v = rng.random_range(-40.0..40.0);
        let s_t = rng.random_range(-40.0..40.0);
        let a = alpha_weights(s_v, s_t).expect("finite scores");
        worst = worst.max((a.alpha_v() + a.alpha_t() - 1.0).abs());
    }
    let sentinels_exact = [
        (f64::NEG_INFINITY, 2.5, (0.0, 1.0)),
        (2.5, f64::NEG_INFINITY, (1.0, 0.0)),
        (f64::INFINITY, 2.5, (1.0, 0.0)),
        (2.5, f64::INFINITY, (0.0, 1.0)),
    ]
    .iter()
    .all(|&(s_v, s_t, want)| {
        alpha_weights(s_v, s_t)
            .map(|a| (a.alpha_v(), a.alpha_t()) == want)
            .unwrap_or(false)
    });
    CheckOutcome {
        name: "alpha-complement",
        passed: worst <= 1e-15 && sentinels_exact,
        details: format!(
            "max |alpha_v + alpha_t - 1| = {worst:.3e} over 10^4 pairs; infinite sentinels exact: {sentinels_exact}"
        ),
    }
}

fn check_gradient_correctness() -> CheckOutcome {
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
    let analytic = match fixed_loss_and_gradients(t, &seq, &weights, &coeffs) {
        Ok((_, g)) => g,
        Err(e) => {
            return CheckOutcome {
                name: "gradient-check",
                passed: false,
                details: format!("forward failed: {e}"),
            }
        }
    };
    let numeric = central_difference_gradients(t, &seq, &weights, &coeffs, 1e-5);
    let mut worst_rel: f64 = 0.0;
    let mut ok = true;
    for (a, n) in [
        (&analytic.wq, &numeric.wq),
        (&analytic.wk, &numeric.wk),
        (&analytic.wv, &numeric.wv),
        (&analytic.wo, &numeric.wo),
    ] {
        for (av, nv) in a.data().iter().zip(n.data()) {
            let denom = av.abs().max(nv.abs());
            let diff = (av - nv).abs();
            if denom > 0.0 {
                worst_rel = worst_rel.max(diff / denom.max(1e-12));
            }
            if diff > 1e-6 * denom && diff > 1e-9 {
                ok = false;
            }
        }
    }
    CheckOutcome {
        name: "gradient-check",
        passed: ok,
        details: format!(
            "central differences (h=1e-5) vs analytic over {} parameters, max rel err {worst_rel:.3e} (tol 1e-6)",
            4 * 8 * 8
        ),
    }
}

fn check_debias_invariance() -> CheckOutcome {
    let rope = PositionalScheme::rotary();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37));
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
            .map(|&t| debiased_cross_attention(t, &seq, &weights, rope).expect("forward succeeds"))
            .collect();
        seq.shift_positions(Modality::Visual, 1000);
        seq.shift_positions(Modality::Audio, 1000);
        for (&t, want) in texts.iter().zip(&before) {
            let after =
                debiased_cross_attention(t, &seq, &weights, rope).expect("forward succeeds");
            let identical = after
                .iter()
                .zip(want)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            if !identical {
                return CheckOutcome {
                    name: "debias-invariance",
                    passed: false,
                    details: format!("seed {seed}: output moved under a +1000 position shift"),
                };
            }
        }
    }
    CheckOutcome {
        name: "debias-invariance",
        passed: true,
        details: "bit-identical under +1000 visual/audio position shifts across 20 seeds".into(),
    }
}

fn check_block_locality() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB10C);
    let shape = SeqShape {
        d: 8,
        n_visual: 8,
        tokens_per_frame: 4,
        n_audio: 0,
        tokens_per_chunk: 1,
        n_text: 1,
    };
    let mut seq = random_sequence(&shape, &mut rng);
    let weights = ProjectionWeights::random(8, &mut rng, 0.3);
    let before = v2v_rows(
        &seq,
        &weights,
        Modality::Visual,
        CountMode::Diagonal,
        V2vGranularity::PerFrame,
    )
    .expect("visual tokens present");
    for token in 4..8 {
        let row: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        seq.set_embedding_row(token, &row).expect("valid row");
    }
    let after = v2v_rows(
        &seq,
        &weights,
        Modality::Visual,
        CountMode::Diagonal,
        V2vGranularity::PerFrame,
    )
    .expect("visual tokens present");
    let frame1_identical = (0..4).all(|i| {
        before
            .rows
            .row(i)
            .iter()
            .zip(after.rows.row(i))
            .all(|(a, b)| a.to_bits() == b.to_bits())
    });
    let frame2_moved = (4..8).any(|i| max_abs_diff(before.rows.row(i), after.rows.row(i)) > 1e-9);
    CheckOutcome {
        name: "block-locality",
        passed: frame1_identical && frame2_moved,
        details: format!(
            "perturbing frame 2: frame 1 bit-identical = {frame1_identical}, frame 2 changed = {frame2_moved}"
        ),
    }
}

fn check_numeric_stability() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57AB);
    let n = 64;
    // One-dimensional keys with |logit| up to 700.
    let keys = Mat::from_fn(n, 1, |_, _| rng.random_range(-700.0..700.0));
    let vals = Mat::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
    let q = [1.0];
    let lse_ok = lse_score(&q, &keys).map(|s| s.is_finite()).unwrap_or(false);
    let attn_ok = reference_attention(&q, &keys, &vals)
        .map(|o| o.iter().all(|v| v.is_finite()))
        .unwrap_or(false);
    CheckOutcome {
        name: "numeric-stability",
        passed: lse_ok && attn_ok,
        details: format!("logits up to ±700: lse finite = {lse_ok}, attention finite = {attn_ok}"),
    }
}

fn v2v_ops_at(n_frames: usize, tokens_per_frame: usize, mode: CountMode) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(n_frames as u64);
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
        .expect("visual tokens present")
        .score_ops
}

fn check_diagonal_op_scaling() -> CheckOutcome {
    let tokens_per_frame = 4;
    let small = v2v_ops_at(512, tokens_per_frame, CountMode::Diagonal);
    let large = v2v_ops_at(1024, tokens_per_frame, CountMode::Diagonal);
    let ratio = large as f64 / small as f64;
    // Executed counts must also match the closed form exactly.
    let tl = TokenTimeline::new(1.0, tokens_per_frame as u64, 1).expect("valid timeline");
    let closed_small = tl.op_count(512.0, CountMode::Diagonal).expect("count");
    let closed_large = tl.op_count(1024.0, CountMode::Diagonal).expect("count");
    let closed_matches = closed_small == small as u128 && closed_large == large as u128;
    CheckOutcome {
        name: "opcount-diagonal-scaling",
        passed: (ratio - 2.0).abs() <= 0.1 && closed_matches,
        details: format!(
            "512→1024 frames: measured {small}→{large} score ops (ratio {ratio:.4}, want 2±5%); closed form matches: {closed_matches}"
        ),
    }
}

fn check_full_op_scaling() -> CheckOutcome {
    let tokens_per_frame = 4;
    let small = v2v_ops_at(512, tokens_per_frame, CountMode::Full);
    let large = v2v_ops_at(1024, tokens_per_frame, CountMode::Full);
    let ratio = large as f64 / small as f64;
    CheckOutcome {
        name: "opcount-full-scaling",
        passed: (ratio - 4.0).abs() <= 0.2,
        details: format!(
            "512→1024 frames: measured {small}→{large} score ops (ratio {ratio:.4}, want 4±5%)"
        ),
    }
}

fn check_token_arithmetic() -> CheckOutcome {
    let tl = match TokenTimeline::new(1.0, 400, 25) {
        Ok(tl) => tl,
        Err(e) => {
            return CheckOutcome {
                name: "token-arithmetic",
                passed: false,
                details: format!("timeline construction failed: {e}"),
            }
        }
    };
    let count = tl.visual_token_count(3600.0).unwrap_or(0);
    let span = tl
        .tokens_for_time(0.0, 3600.0)
        .map(|(v, _)| v.len())
        .unwrap_or(0);
    let diag = tl.op_count(3600.0, CountMode::Diagonal).unwrap_or(0);
    let full = tl.op_count(3600.0, CountMode::Full).unwrap_or(0);
    let passed = count == 1_440_000
        && span == 1_440_000
        && diag == 3600 * 400 * 400
        && full == 1_440_000u128 * 1_440_000u128;
    CheckOutcome {
        name: "token-arithmetic",
        passed,
        details: format!(
            "1h @ 400 tok/frame, 1 fps: N = {count}, span = {span}, diagonal ops = {diag}, full ops = {full}"
        ),
    }
}

fn check_text_only_equivalence(config: &CheckConfig) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7E87 + seed);
        let shape = SeqShape {
            d: 16,
            n_visual: 0,
            tokens_per_frame: 1,
            n_audio: 0,
            tokens_per_chunk: 1,
            n_text: rng.random_range(2..=24),
        };
        let seq = random_sequence(&shape, &mut rng);
        let weights = ProjectionWeights::random(16, &mut rng, 0.25);
        let layer_config = LayerConfig {
            text_mode: config.text_mode,
            ..LayerConfig::default()
        };
        let got = match layer_forward(&seq, &layer_config, &weights) {
            Ok(o) => o,
            Err(e) => {
                return CheckOutcome {
                    name: "text-only-equivalence",
                    passed: false,
                    details: format!("seed {seed}: {e}"),
                }
            }
        };
        let want =
            causal_reference_layer(&seq, &weights, layer_config.rope).expect("oracle succeeds");
        worst = worst.max(max_abs_diff(got.output.data(), want.data()));
    }
    CheckOutcome {
        name: "text-only-equivalence",
        passed: worst < 1e-10,
        details: format!(
            "text-only layer vs plain causal attention: max |Δ| = {worst:.3e} over 10 seeds (tol 1e-10)"
        ),
    }
}

/// Mean `alpha_v` for i.i.d. standard-normal logits with `n_visual`
/// visual and `n_text` text entries, averaged over seeds.
pub fn mean_alpha_v(n_visual: usize, n_text: usize, seeds: u64) -> f64 {
    let mut total = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA15A ^ seed);
        let logit = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
        let s_v = lse_of((0..n_visual).map(|_| logit(&mut rng)).collect());
        let s_t = lse_of((0..n_text).map(|_| logit(&mut rng)).collect());
        let a = alpha_weights(s_v, s_t).expect("nonempty streams");
        total += a.alpha_v();
    }
    total / seeds as f64
}

fn lse_of(scores: Vec<f64>) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln() + m
}

fn check_alpha_saturation() -> CheckOutcome {
    let means: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| mean_alpha_v(n, 16, 200))
        .collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    CheckOutcome {
        name: "alpha-saturation",
        passed: increasing,
        details: format!(
            "mean alpha_v at N=10/100/1000 (M=16, 200 seeds): {:.4} / {:.4} / {:.4}, strictly increasing: {increasing}",
            means[0], means[1], means[2]
        ),
    }
}

fn check_fixed_sum_definition() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1DE);
    let shape = SeqShape {
        d: 16,
        n_visual: 6,
        tokens_per_frame: 3,
        n_audio: 4,
        tokens_per_chunk: 2,
        n_text: 5,
    };
    let seq = random_sequence(&shape, &mut rng);
    let weights = ProjectionWeights::random(16, &mut rng, 0.25);
    let t = seq.len() - 1;
    let combined = decomposed_fixed(t, &seq, &weights).expect("forward succeeds");
    let parts = decomposed_fixed_parts(t, &seq, &weights).expect("forward succeeds");
    let manual = parts.combined();
    let bitwise = combined
        .iter()
        .zip(&manual)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    CheckOutcome {
        name: "fixed-sum-definition",
        passed: bitwise,
        details: format!("branch-sum definition holds bit-for-bit: {bitwise}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let config = CheckConfig {
            seeds: 10,
            ..CheckConfig::default()
        };
        let report = run_suite(&config);
        assert!(report.all_passed(), "{}", report.to_table());
    }

    #[test]
    fn injected_sign_flip_is_detected() {
        let config = CheckConfig {
            seeds: 3,
            fault: Some(FaultInjection::DecompositionSignFlip),
            ..CheckConfig::default()
        };
        let report = run_suite(&config);
        assert!(!report.all_passed());
        assert_eq!(
            report.first_failure().map(|o| o.name),
            Some("decomposition-identity")
        );
    }

    #[test]
    fn suite_runs_in_adaptive_text_mode() {
        let config = CheckConfig {
            seeds: 5,
            text_mode: TextMode::Adaptive,
            ..CheckConfig::default()
        };
        assert!(run_suite(&config).all_passed());
    }

    #[test]
    fn table_rendering_has_one_line_per_check() {
        let config = CheckConfig {
            seeds: 2,
            ..CheckConfig::default()
        };
        let report = run_suite(&config);
        assert_eq!(report.to_table().lines().count(), report.outcomes.len());
    }
}
