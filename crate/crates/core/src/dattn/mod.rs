//! A desk-scale, numerically exact decomposed attention kernel.
//!
//! Causal self-attention over a concatenated `[visual, audio, text]`
//! token sequence is rewritten into per-modality branches: block-local
//! self-attention for visual and audio tokens, and for each text token a
//! combination of cross-attention onto the visual/audio streams with
//! causal self-attention over earlier text. The α-adaptive combination
//! reproduces monolithic causal attention exactly; the fixed-α variant
//! sums the branches with unit weights. Visual block locality drops the
//! cost of the visual branch from quadratic to linear in the number of
//! frames.
//!
//! Kernels are pure functions of their inputs with a fixed summation
//! order, so equality assertions in the test suite can be bit-exact.

pub mod check;
pub mod grad;
pub mod kernel;
pub mod linalg;
pub mod rope;
pub mod timeline;

use rand::Rng;

use crate::error::{Error, Result};
pub use grad::{fixed_loss_and_gradients, LayerGradients};
pub use kernel::{
    alpha_weights, biased_cross_attention, causal_reference_layer, debiased_cross_attention,
    decomposed_adaptive, decomposed_fixed, decomposed_fixed_parts, diagonal_v2v, layer_forward,
    lse_score, reference_attention, v2v_rows, FixedParts, LayerOutput, V2vOutput,
};
pub use linalg::Mat;
pub use rope::PositionalScheme;
pub use timeline::{CountMode, TokenSpan, TokenTimeline};

/// Which stream a token belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Visual,
    Audio,
    Text,
}

/// A multimodal token sequence laid out as `[visual..., audio..., text...]`.
///
/// `segment_id` groups visual tokens into frames and audio tokens into
/// chunks; block-local attention only looks within a segment.
/// `position` carries the index used by rotary encoding on the text
/// self-attention branch (cross branches never read it).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    embeddings: Mat,
    modality: Vec<Modality>,
    segment_id: Vec<u32>,
    position: Vec<u64>,
}

impl TokenSequence {
    pub fn new(
        embeddings: Mat,
        modality: Vec<Modality>,
        segment_id: Vec<u32>,
        position: Vec<u64>,
    ) -> Result<Self> {
        let n = embeddings.rows();
        if modality.len() != n || segment_id.len() != n || position.len() != n {
            return Err(Error::Contract(format!(
                "token sequence field lengths disagree: {n} embeddings, {} modality, {} segment, {} position",
                modality.len(),
                segment_id.len(),
                position.len()
            )));
        }
        if !embeddings.is_finite() {
            return Err(Error::Numeric("non-finite token embedding".into()));
        }
        // Layout must be all visual, then all audio, then all text.
        let rank = |m: &Modality| match m {
            Modality::Visual => 0,
            Modality::Audio => 1,
            Modality::Text => 2,
        };
        if modality.windows(2).any(|w| rank(&w[0]) > rank(&w[1])) {
            return Err(Error::Contract(
                "tokens must be laid out as [visual, audio, text]".into(),
            ));
        }
        for kind in [Modality::Visual, Modality::Audio, Modality::Text] {
            let mut last = None;
            for (m, s) in modality.iter().zip(&segment_id) {
                if *m != kind {
                    continue;
                }
                if let Some(prev) = last {
                    if *s < prev {
                        return Err(Error::Contract(format!(
                            "segment ids must be non-decreasing within a modality (saw {s} after {prev})"
                        )));
                    }
                }
                last = Some(*s);
            }
        }
        Ok(Self {
            embeddings,
            modality,
            segment_id,
            position,
        })
    }

    pub fn len(&self) -> usize {
        self.modality.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modality.is_empty()
    }

    pub fn d_model(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn modality(&self, token: usize) -> Modality {
        self.modality[token]
    }

    pub fn segment_id(&self, token: usize) -> u32 {
        self.segment_id[token]
    }

    pub fn position(&self, token: usize) -> u64 {
        self.position[token]
    }

    pub fn embedding(&self, token: usize) -> &[f64] {
        self.embeddings.row(token)
    }

    pub fn indices_of(&self, kind: Modality) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.modality[i] == kind)
            .collect()
    }

    /// Replaces one embedding row (used to perturb single frames in
    /// locality tests).
    pub fn set_embedding_row(&mut self, token: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.d_model() {
            return Err(Error::Contract("embedding row width mismatch".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite token embedding".into()));
        }
        self.embeddings.row_mut(token).copy_from_slice(row);
        Ok(())
    }

    /// Shifts the positions of every token of the given modality.
    pub fn shift_positions(&mut self, kind: Modality, delta: u64) {
        for (m, p) in self.modality.iter().zip(self.position.iter_mut()) {
            if *m == kind {
                *p += delta;
            }
        }
    }

    pub fn set_position(&mut self, token: usize, position: u64) {
        self.position[token] = position;
    }
}

/// One shared projection set applied to every branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
}

impl ProjectionWeights {
    pub fn new(wq: Mat, wk: Mat, wv: Mat, wo: Mat) -> Result<Self> {
        let d = wq.rows();
        for (name, m) in [("wq", &wq), ("wk", &wk), ("wv", &wv), ("wo", &wo)] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::Contract(format!(
                    "projection {name} must be {d}x{d}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_finite() {
                return Err(Error::Numeric(format!("non-finite entries in {name}")));
            }
        }
        Ok(Self { wq, wk, wv, wo })
    }

    pub fn d_model(&self) -> usize {
        self.wq.rows()
    }

    /// Uniform random weights in `[-scale, scale)`, for tests and checks.
    pub fn random(d: usize, rng: &mut impl Rng, scale: f64) -> Self {
        let wq = Mat::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
        let wk = Mat::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
        let wv = Mat::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
        let wo = Mat::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
        Self { wq, wk, wv, wo }
    }
}

/// Log-sum-exp attention mass per modality; `-inf` marks an empty stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseScores {
    pub s_v: f64,
    pub s_a: f64,
    pub s_t: f64,
}

/// Branch mixing coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaWeights {
    /// Sigmoid-of-score-difference weights for the two-way visual/text
    /// split; `alpha_v + alpha_t == 1`.
    Adaptive { alpha_v: f64, alpha_t: f64 },
    /// Unit weights on every branch.
    Fixed,
}

impl AlphaWeights {
    pub fn alpha_v(&self) -> f64 {
        match self {
            AlphaWeights::Adaptive { alpha_v, .. } => *alpha_v,
            AlphaWeights::Fixed => 1.0,
        }
    }

    pub fn alpha_a(&self) -> f64 {
        match self {
            // The adaptive derivation only covers the visual/text split.
            AlphaWeights::Adaptive { .. } => 0.0,
            AlphaWeights::Fixed => 1.0,
        }
    }

    pub fn alpha_t(&self) -> f64 {
        match self {
            AlphaWeights::Adaptive { alpha_t, .. } => *alpha_t,
            AlphaWeights::Fixed => 1.0,
        }
    }
}

/// Text-branch combination rule for [`kernel::layer_forward`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextMode {
    /// Unit-weight branch sum (visual + audio + text).
    #[default]
    Fixed,
    /// Exact α-weighted two-way decomposition (visual + text only).
    Adaptive,
}

/// Block structure of visual (and audio) self-attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum V2vGranularity {
    /// Tokens attend within their own frame / chunk.
    #[default]
    PerFrame,
    /// Tokens attend only to themselves.
    PerToken,
}

/// Layer-level configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerConfig {
    pub text_mode: TextMode,
    pub rope: PositionalScheme,
    pub v2v: V2vGranularity,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            text_mode: TextMode::Fixed,
            rope: PositionalScheme::rotary(),
            v2v: V2vGranularity::PerFrame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rejects_interleaved_layout() {
        let emb = Mat::zeros(2, 4);
        let err = TokenSequence::new(
            emb,
            vec![Modality::Text, Modality::Visual],
            vec![0, 0],
            vec![0, 1],
        );
        assert!(err.is_err());
    }

    #[test]
    fn sequence_rejects_decreasing_segments() {
        let emb = Mat::zeros(3, 2);
        let err = TokenSequence::new(
            emb,
            vec![Modality::Visual, Modality::Visual, Modality::Text],
            vec![1, 0, 0],
            vec![0, 1, 2],
        );
        assert!(err.is_err());
    }

    #[test]
    fn sequence_accepts_canonical_layout() {
        let emb = Mat::zeros(4, 2);
        let seq = TokenSequence::new(
            emb,
            vec![
                Modality::Visual,
                Modality::Audio,
                Modality::Text,
                Modality::Text,
            ],
            vec![0, 0, 0, 0],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        assert_eq!(seq.indices_of(Modality::Text), vec![2, 3]);
    }

    #[test]
    fn projections_must_be_square_and_uniform() {
        let bad = ProjectionWeights::new(
            Mat::zeros(4, 4),
            Mat::zeros(4, 3),
            Mat::zeros(4, 4),
            Mat::zeros(4, 4),
        );
        assert!(bad.is_err());
    }
}
