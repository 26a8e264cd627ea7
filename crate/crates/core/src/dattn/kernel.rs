//! Attention kernels: monolithic softmax reference, log-sum-exp scores,
//! α-weights, decomposed text-token attention, block-local visual/audio
//! self-attention, and the full layer forward pass.
//!
//! Every kernel uses max-shifted exponentials and a fixed summation
//! order. Score work is instrumented by counting query·key dot products,
//! which is the quantity the complexity claims are stated in.

use crate::error::{Error, Result};

use super::linalg::{axpy, dot, Mat};
use super::rope::{apply_rotary, PositionalScheme};
use super::timeline::CountMode;
use super::{
    AlphaWeights, LayerConfig, LseScores, Modality, ProjectionWeights, TextMode, TokenSequence,
    V2vGranularity,
};

/// Softmax-attention oracle: `softmax(q·Kᵀ)·V` over all rows of `keys`.
pub fn reference_attention(q: &[f64], keys: &Mat, vals: &Mat) -> Result<Vec<f64>> {
    if keys.rows() == 0 {
        return Err(Error::EmptyAttention);
    }
    if keys.rows() != vals.rows() || keys.cols() != q.len() {
        return Err(Error::Contract(format!(
            "attention shape mismatch: q[{}], keys {}x{}, vals {}x{}",
            q.len(),
            keys.rows(),
            keys.cols(),
            vals.rows(),
            vals.cols()
        )));
    }
    if q.iter().any(|v| !v.is_finite()) || !keys.is_finite() || !vals.is_finite() {
        return Err(Error::Numeric("non-finite attention input".into()));
    }
    let scores: Vec<f64> = (0..keys.rows()).map(|i| dot(q, keys.row(i))).collect();
    let weights = softmax(&scores);
    let mut out = vec![0.0; vals.cols()];
    for (i, w) in weights.iter().enumerate() {
        axpy(&mut out, *w, vals.row(i));
    }
    Ok(out)
}

/// `log Σ exp(q·kᵢ)` with max-shift; an empty key set scores `-inf`.
pub fn lse_score(q: &[f64], keys: &Mat) -> Result<f64> {
    if q.iter().any(|v| !v.is_finite()) || !keys.is_finite() {
        return Err(Error::Numeric("non-finite log-sum-exp input".into()));
    }
    if keys.rows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if keys.cols() != q.len() {
        return Err(Error::Contract("log-sum-exp dimension mismatch".into()));
    }
    let scores: Vec<f64> = (0..keys.rows()).map(|i| dot(q, keys.row(i))).collect();
    Ok(lse(&scores))
}

fn lse(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = scores.iter().map(|s| (s - m).exp()).sum();
    sum.ln() + m
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// α-weights from the visual/text log-sum-exp scores:
/// `alpha_v = σ(s_v − s_t)`, `alpha_t = 1 − alpha_v`.
///
/// A `-inf` sentinel (empty stream) maps to an exact zero weight for that
/// stream; both streams empty is an error.
pub fn alpha_weights(s_v: f64, s_t: f64) -> Result<AlphaWeights> {
    if s_v.is_nan() || s_t.is_nan() {
        return Err(Error::Numeric("NaN log-sum-exp score".into()));
    }
    if s_v == f64::NEG_INFINITY && s_t == f64::NEG_INFINITY {
        return Err(Error::DegenerateAttention(
            "both visual and text streams are empty".into(),
        ));
    }
    if s_v == f64::INFINITY && s_t == f64::INFINITY {
        return Err(Error::Numeric(
            "indeterminate α for two infinite scores".into(),
        ));
    }
    let alpha_v = sigmoid(s_v - s_t);
    Ok(AlphaWeights::Adaptive {
        alpha_v,
        alpha_t: 1.0 - alpha_v,
    })
}

/// The three per-modality log-sum-exp scores of a text token's query
/// against the full visual stream, the full audio stream, and the causal
/// text prefix.
pub fn lse_scores_for_token(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
) -> Result<LseScores> {
    let ctx = TextContext::prepare(t_index, seq, weights)?;
    let score_of = |idxs: &[usize]| {
        if idxs.is_empty() {
            f64::NEG_INFINITY
        } else {
            let scores: Vec<f64> = idxs
                .iter()
                .map(|&j| dot(&ctx.q_raw, &weights.wk.matvec(seq.embedding(j))))
                .collect();
            lse(&scores)
        }
    };
    Ok(LseScores {
        s_v: score_of(&ctx.visual),
        s_a: score_of(&ctx.audio),
        s_t: score_of(&ctx.text),
    })
}

/// Precomputed branch index sets and the raw query for one text token.
struct TextContext {
    q_raw: Vec<f64>,
    position: u64,
    visual: Vec<usize>,
    audio: Vec<usize>,
    text: Vec<usize>,
}

impl TextContext {
    fn prepare(t_index: usize, seq: &TokenSequence, weights: &ProjectionWeights) -> Result<Self> {
        if t_index >= seq.len() {
            return Err(Error::Contract(format!(
                "token index {t_index} out of bounds for sequence of {}",
                seq.len()
            )));
        }
        if seq.modality(t_index) != Modality::Text {
            return Err(Error::Contract(format!(
                "token {t_index} is not a text token"
            )));
        }
        if weights.d_model() != seq.d_model() {
            return Err(Error::Contract(format!(
                "projection width {} does not match embedding width {}",
                weights.d_model(),
                seq.d_model()
            )));
        }
        let visual = seq.indices_of(Modality::Visual);
        let audio = seq.indices_of(Modality::Audio);
        let text: Vec<usize> = seq
            .indices_of(Modality::Text)
            .into_iter()
            .filter(|&i| i <= t_index)
            .collect();
        Ok(Self {
            q_raw: weights.wq.matvec(seq.embedding(t_index)),
            position: seq.position(t_index),
            visual,
            audio,
            text,
        })
    }
}

/// One attention branch: softmax over the listed tokens' keys, applied
/// to their values. Returns the branch output and its log-sum-exp mass.
/// `key_rope` optionally rotates each key at its token position.
fn branch(
    q: &[f64],
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    idxs: &[usize],
    key_rope: Option<f64>,
    score_ops: &mut u64,
) -> Option<(Vec<f64>, f64)> {
    if idxs.is_empty() {
        return None;
    }
    let scores: Vec<f64> = idxs
        .iter()
        .map(|&j| {
            let k = weights.wk.matvec(seq.embedding(j));
            let k = match key_rope {
                Some(base) => apply_rotary(&k, seq.position(j), base),
                None => k,
            };
            dot(q, &k)
        })
        .collect();
    *score_ops += idxs.len() as u64;
    let mass = lse(&scores);
    let w = softmax(&scores);
    let mut out = vec![0.0; weights.d_model()];
    for (&j, wj) in idxs.iter().zip(&w) {
        axpy(&mut out, *wj, &weights.wv.matvec(seq.embedding(j)));
    }
    Some((out, mass))
}

/// Branch outputs of the fixed-α decomposition for one text token.
/// `None` marks an empty stream (zero contribution).
#[derive(Debug, Clone, PartialEq)]
pub struct FixedParts {
    pub visual: Option<Vec<f64>>,
    pub audio: Option<Vec<f64>>,
    pub text: Vec<f64>,
}

impl FixedParts {
    /// Unit-weight branch sum, in visual → audio → text order.
    pub fn combined(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.text.len()];
        if let Some(v) = &self.visual {
            axpy(&mut out, 1.0, v);
        }
        if let Some(a) = &self.audio {
            axpy(&mut out, 1.0, a);
        }
        axpy(&mut out, 1.0, &self.text);
        out
    }
}

fn text_parts(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    self_rope: Option<f64>,
    cross_rope: Option<f64>,
    score_ops: &mut u64,
) -> Result<FixedParts> {
    let ctx = TextContext::prepare(t_index, seq, weights)?;
    if ctx.visual.is_empty() && ctx.audio.is_empty() && ctx.text.is_empty() {
        return Err(Error::DegenerateAttention(
            "no attendable tokens before the text token".into(),
        ));
    }
    let q_cross = match cross_rope {
        Some(base) => apply_rotary(&ctx.q_raw, ctx.position, base),
        None => ctx.q_raw.clone(),
    };
    let q_self = match self_rope {
        Some(base) => apply_rotary(&ctx.q_raw, ctx.position, base),
        None => ctx.q_raw.clone(),
    };
    let visual = branch(&q_cross, seq, weights, &ctx.visual, cross_rope, score_ops);
    let audio = branch(&q_cross, seq, weights, &ctx.audio, cross_rope, score_ops);
    let text = branch(&q_self, seq, weights, &ctx.text, self_rope, score_ops)
        .expect("text branch contains at least the token itself");
    Ok(FixedParts {
        visual: visual.map(|(v, _)| v),
        audio: audio.map(|(v, _)| v),
        text: text.0,
    })
}

/// Fixed-α decomposed attention for one text token: the plain sum of
/// visual cross-attention, audio cross-attention, and causal text
/// self-attention, each a proper softmax over its own stream. No
/// positional encoding on any branch.
pub fn decomposed_fixed(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
) -> Result<Vec<f64>> {
    Ok(decomposed_fixed_parts(t_index, seq, weights)?.combined())
}

/// The individual branch outputs behind [`decomposed_fixed`].
pub fn decomposed_fixed_parts(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
) -> Result<FixedParts> {
    let mut ops = 0;
    text_parts(t_index, seq, weights, None, None, &mut ops)
}

/// α-adaptive decomposed attention for one text token over a
/// visual+text sequence. Reproduces monolithic causal attention over
/// the concatenated `[visual, text..=t]` context exactly (double
/// precision): the α-weights are the softmax mass each stream holds in
/// the combined attention.
pub fn decomposed_adaptive(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
) -> Result<Vec<f64>> {
    let ctx = TextContext::prepare(t_index, seq, weights)?;
    if !ctx.audio.is_empty() {
        return Err(Error::Contract(
            "adaptive decomposition covers the visual/text split only; use fixed mode for audio"
                .into(),
        ));
    }
    let mut ops = 0;
    let visual = branch(&ctx.q_raw, seq, weights, &ctx.visual, None, &mut ops);
    let text = branch(&ctx.q_raw, seq, weights, &ctx.text, None, &mut ops)
        .expect("text branch contains at least the token itself");
    let s_v = visual.as_ref().map_or(f64::NEG_INFINITY, |(_, m)| *m);
    let alpha = alpha_weights(s_v, text.1)?;
    let mut out = vec![0.0; weights.d_model()];
    if let Some((v, _)) = &visual {
        axpy(&mut out, alpha.alpha_v(), v);
    }
    axpy(&mut out, alpha.alpha_t(), &text.0);
    Ok(out)
}

/// Decomposed attention with rotary positions on the text self-attention
/// branch only; the cross branches see no positional signal at all, so
/// their output is invariant under any reassignment of visual/audio
/// position indices.
pub fn debiased_cross_attention(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    rope: PositionalScheme,
) -> Result<Vec<f64>> {
    let self_rope = match rope {
        PositionalScheme::None => None,
        PositionalScheme::Rotary { base } => Some(base),
    };
    let mut ops = 0;
    Ok(text_parts(t_index, seq, weights, self_rope, None, &mut ops)?.combined())
}

/// Comparison baseline that applies the positional scheme on every
/// branch, cross-attention included. With `PositionalScheme::None` this
/// coincides with [`debiased_cross_attention`].
pub fn biased_cross_attention(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    rope: PositionalScheme,
) -> Result<Vec<f64>> {
    let base = match rope {
        PositionalScheme::None => None,
        PositionalScheme::Rotary { base } => Some(base),
    };
    let mut ops = 0;
    Ok(text_parts(t_index, seq, weights, base, base, &mut ops)?.combined())
}

/// Block-local self-attention rows plus the instrumented score-op count.
#[derive(Debug, Clone, PartialEq)]
pub struct V2vOutput {
    /// One output row per token of the modality, in token order.
    pub rows: Mat,
    /// Number of query·key score products evaluated.
    pub score_ops: u64,
}

/// Self-attention over one modality's tokens. `CountMode::Diagonal`
/// restricts each token to its own segment block (frame or chunk);
/// `CountMode::Full` lets every token attend to the whole stream.
pub fn v2v_rows(
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    kind: Modality,
    mode: CountMode,
    granularity: V2vGranularity,
) -> Result<V2vOutput> {
    if weights.d_model() != seq.d_model() {
        return Err(Error::Contract(
            "projection width does not match embedding width".into(),
        ));
    }
    let idxs = seq.indices_of(kind);
    if idxs.is_empty() {
        return Err(Error::EmptyAttention);
    }
    let d = seq.d_model();
    let blocks: Vec<Vec<usize>> = match (mode, granularity) {
        (CountMode::Full, _) => vec![idxs.clone()],
        (CountMode::Diagonal, V2vGranularity::PerToken) => {
            idxs.iter().map(|&i| vec![i]).collect()
        }
        (CountMode::Diagonal, V2vGranularity::PerFrame) => {
            let mut blocks: Vec<Vec<usize>> = Vec::new();
            for &i in &idxs {
                match blocks.last_mut() {
                    Some(b) if seq.segment_id(b[0]) == seq.segment_id(i) => b.push(i),
                    _ => blocks.push(vec![i]),
                }
            }
            blocks
        }
    };

    let mut rows = Mat::zeros(idxs.len(), d);
    let mut score_ops = 0u64;
    let mut row_cursor = 0;
    for block in &blocks {
        let keys: Vec<Vec<f64>> = block
            .iter()
            .map(|&j| weights.wk.matvec(seq.embedding(j)))
            .collect();
        let vals: Vec<Vec<f64>> = block
            .iter()
            .map(|&j| weights.wv.matvec(seq.embedding(j)))
            .collect();
        for &i in block {
            let q = weights.wq.matvec(seq.embedding(i));
            let scores: Vec<f64> = keys.iter().map(|k| dot(&q, k)).collect();
            score_ops += keys.len() as u64;
            let w = softmax(&scores);
            let out = rows.row_mut(row_cursor);
            for (wj, vj) in w.iter().zip(&vals) {
                for (o, v) in out.iter_mut().zip(vj) {
                    *o += wj * v;
                }
            }
            row_cursor += 1;
        }
    }
    Ok(V2vOutput { rows, score_ops })
}

/// Per-frame block-diagonal visual self-attention: each visual token
/// attends only to visual tokens sharing its frame.
pub fn diagonal_v2v(seq: &TokenSequence, weights: &ProjectionWeights) -> Result<Mat> {
    Ok(v2v_rows(
        seq,
        weights,
        Modality::Visual,
        CountMode::Diagonal,
        V2vGranularity::PerFrame,
    )?
    .rows)
}

/// Full layer output plus instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    pub output: Mat,
    pub score_ops: u64,
}

/// One decomposed attention layer over a `[visual, audio, text]`
/// sequence: block-local self-attention for visual and audio rows,
/// decomposed (fixed or adaptive) attention with debiased cross branches
/// for text rows, one shared projection set, and the output projection
/// applied to every row.
pub fn layer_forward(
    seq: &TokenSequence,
    config: &LayerConfig,
    weights: &ProjectionWeights,
) -> Result<LayerOutput> {
    if seq.is_empty() {
        return Err(Error::Contract(
            "cannot run a layer over an empty sequence".into(),
        ));
    }
    if weights.d_model() != seq.d_model() {
        return Err(Error::Contract(
            "projection width does not match embedding width".into(),
        ));
    }
    let d = seq.d_model();
    let mut pre = Mat::zeros(seq.len(), d);
    let mut score_ops = 0u64;

    for kind in [Modality::Visual, Modality::Audio] {
        let idxs = seq.indices_of(kind);
        if idxs.is_empty() {
            continue;
        }
        let blocks = v2v_rows(seq, weights, kind, CountMode::Diagonal, config.v2v)?;
        score_ops += blocks.score_ops;
        for (slot, &token) in idxs.iter().enumerate() {
            pre.row_mut(token).copy_from_slice(blocks.rows.row(slot));
        }
    }

    let self_rope = match config.rope {
        PositionalScheme::None => None,
        PositionalScheme::Rotary { base } => Some(base),
    };
    for t in seq.indices_of(Modality::Text) {
        let out = match config.text_mode {
            TextMode::Fixed => {
                text_parts(t, seq, weights, self_rope, None, &mut score_ops)?.combined()
            }
            TextMode::Adaptive => {
                let ctx = TextContext::prepare(t, seq, weights)?;
                if !ctx.audio.is_empty() {
                    return Err(Error::Contract(
                        "adaptive decomposition covers the visual/text split only; use fixed mode for audio".into(),
                    ));
                }
                let visual = branch(&ctx.q_raw, seq, weights, &ctx.visual, None, &mut score_ops);
                let q_self = match self_rope {
                    Some(base) => apply_rotary(&ctx.q_raw, ctx.position, base),
                    None => ctx.q_raw.clone(),
                };
                let text = branch(&q_self, seq, weights, &ctx.text, self_rope, &mut score_ops)
                    .expect("text branch contains at least the token itself");
                let s_v = visual.as_ref().map_or(f64::NEG_INFINITY, |(_, m)| *m);
                let alpha = alpha_weights(s_v, text.1)?;
                let mut out = vec![0.0; d];
                if let Some((v, _)) = &visual {
                    axpy(&mut out, alpha.alpha_v(), v);
                }
                axpy(&mut out, alpha.alpha_t(), &text.0);
                out
            }
        };
        pre.row_mut(t).copy_from_slice(&out);
    }

    let mut output = Mat::zeros(seq.len(), d);
    for i in 0..seq.len() {
        let projected = weights.wo.matvec(pre.row(i));
        output.row_mut(i).copy_from_slice(&projected);
    }
    Ok(LayerOutput { output, score_ops })
}

/// Monolithic causal self-attention layer used as the equivalence
/// oracle: every token attends to all tokens at or before it, with the
/// positional scheme applied to every query and key, then the output
/// projection. Deliberately computed by direct loops, independent of the
/// decomposed paths above.
pub fn causal_reference_layer(
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    rope: PositionalScheme,
) -> Result<Mat> {
    if seq.is_empty() {
        return Err(Error::Contract(
            "cannot run a layer over an empty sequence".into(),
        ));
    }
    let d = seq.d_model();
    let encode = |v: Vec<f64>, token: usize| -> Vec<f64> {
        match rope {
            PositionalScheme::None => v,
            PositionalScheme::Rotary { base } => apply_rotary(&v, seq.position(token), base),
        }
    };
    let mut output = Mat::zeros(seq.len(), d);
    for i in 0..seq.len() {
        let q = encode(weights.wq.matvec(seq.embedding(i)), i);
        let mut keys = Mat::zeros(i + 1, d);
        let mut vals = Mat::zeros(i + 1, d);
        for j in 0..=i {
            let k = encode(weights.wk.matvec(seq.embedding(j)), j);
            keys.row_mut(j).copy_from_slice(&k);
            vals.row_mut(j)
                .copy_from_slice(&weights.wv.matvec(seq.embedding(j)));
        }
        let attn = reference_attention(&q, &keys, &vals)?;
        output.row_mut(i).copy_from_slice(&weights.wo.matvec(&attn));
    }
    Ok(output)
}
