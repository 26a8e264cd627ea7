//! Token-timeline arithmetic: how many tokens a video of a given length
//! produces, which token spans a time range touches, and the closed-form
//! score-op counts behind the linear-vs-quadratic complexity claim.

use crate::error::{Error, Result};

/// Sampling rates and token densities for one video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenTimeline {
    pub fps: f64,
    pub visual_tokens_per_frame: u64,
    pub audio_tokens_per_second: u64,
    /// Informational; audio tokens are counted per second, not per sample.
    pub audio_sample_rate_hz: u64,
}

impl TokenTimeline {
    pub const DEFAULT_FPS: f64 = 1.0;
    pub const DEFAULT_AUDIO_SAMPLE_RATE_HZ: u64 = 16_000;

    pub fn new(fps: f64, visual_tokens_per_frame: u64, audio_tokens_per_second: u64) -> Result<Self> {
        if !fps.is_finite() || fps <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "fps must be positive and finite, got {fps}"
            )));
        }
        if visual_tokens_per_frame == 0 || audio_tokens_per_second == 0 {
            return Err(Error::InvalidInput(
                "token densities must be at least 1".into(),
            ));
        }
        Ok(Self {
            fps,
            visual_tokens_per_frame,
            audio_tokens_per_second,
            audio_sample_rate_hz: Self::DEFAULT_AUDIO_SAMPLE_RATE_HZ,
        })
    }

    /// Number of frames needed to cover `[0, duration_s)`.
    pub fn frame_count(&self, duration_s: f64) -> Result<u64> {
        if !duration_s.is_finite() || duration_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "duration must be positive and finite, got {duration_s}"
            )));
        }
        Ok((duration_s * self.fps).ceil() as u64)
    }

    /// Total visual token count for the duration.
    pub fn visual_token_count(&self, duration_s: f64) -> Result<u64> {
        Ok(self.frame_count(duration_s)? * self.visual_tokens_per_frame)
    }

    /// Closed-form count of attention score multiplications for the
    /// visual self-attention branch: per-frame blocks in diagonal mode
    /// (linear in frame count), all-pairs in full mode (quadratic in the
    /// token count).
    pub fn op_count(&self, duration_s: f64, mode: CountMode) -> Result<u128> {
        let frames = self.frame_count(duration_s)? as u128;
        let per_frame = self.visual_tokens_per_frame as u128;
        Ok(match mode {
            CountMode::Diagonal => frames * per_frame * per_frame,
            CountMode::Full => {
                let n = frames * per_frame;
                n * n
            }
        })
    }

    /// Half-open visual and audio token index spans covering a time range.
    pub fn tokens_for_time(&self, start_s: f64, end_s: f64) -> Result<(TokenSpan, TokenSpan)> {
        if !start_s.is_finite() || !end_s.is_finite() || start_s < 0.0 || start_s > end_s {
            return Err(Error::InvalidTimeRange { start_s, end_s });
        }
        let visual = TokenSpan {
            start: (start_s * self.fps).floor() as u64 * self.visual_tokens_per_frame,
            end: (end_s * self.fps).ceil() as u64 * self.visual_tokens_per_frame,
        };
        let atps = self.audio_tokens_per_second as f64;
        let audio = TokenSpan {
            start: (start_s * atps).floor() as u64,
            end: (end_s * atps).ceil() as u64,
        };
        Ok((visual, audio))
    }

    /// Time interval covered by one visual token's frame.
    pub fn time_for_visual_token(&self, index: u64) -> (f64, f64) {
        let frame = index / self.visual_tokens_per_frame;
        (frame as f64 / self.fps, (frame + 1) as f64 / self.fps)
    }

    /// Time interval covered by one audio token.
    pub fn time_for_audio_token(&self, index: u64) -> (f64, f64) {
        let atps = self.audio_tokens_per_second as f64;
        (index as f64 / atps, (index + 1) as f64 / atps)
    }
}

/// Visual attention cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// Block-diagonal per-frame attention.
    Diagonal,
    /// All-pairs attention over the whole visual stream.
    Full,
}

/// Half-open `[start, end)` span of token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: u64,
    pub end: u64,
}

impl TokenSpan {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}
