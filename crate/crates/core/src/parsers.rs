//! Parsers that turn heterogeneous model-output text into canonical
//! [`RangeSet`]s.
//!
//! Two output conventions are covered: frame-index ranges (`2-4, 6-8`)
//! that must be mapped back onto the time axis, and free-form timestamp
//! lists mixing `ss`, `ss.fff`, `mm:ss`, and `hh:mm:ss` endpoints with
//! surrounding prose. Parsing is lossy by design — unrecognized
//! fragments are reported as warnings, never panics.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::intervals::RangeSet;

/// An inclusive pair of frame indices, as printed by frame-based models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRange {
    pub first: u64,
    pub last: u64,
}

/// Parsed ranges plus everything the parser had to gloss over:
/// unrecognized fragments, clamped endpoints, swapped reversed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub ranges: RangeSet,
    pub warnings: Vec<String>,
}

static FRAME_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(\d+)\s*[-\u{2013}\u{2014}]\s*(\d+)|(\d+)").expect("static regex compiles")
});

/// Extracts `a-b` frame pairs from text; a standalone integer `a` yields
/// `(a, a)`. Input order is preserved. Reversed pairs are swapped.
pub fn parse_frame_ranges(text: &str) -> Result<Vec<FrameRange>> {
    let mut out = Vec::new();
    for caps in FRAME_RE.captures_iter(text) {
        if let (Some(a), Some(b)) = (caps.get(1), caps.get(2)) {
            let (a, b) = match (a.as_str().parse::<u64>(), b.as_str().parse::<u64>()) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue, // digits overflow u64; skip the fragment
            };
            out.push(FrameRange {
                first: a.min(b),
                last: a.max(b),
            });
        } else if let Some(single) = caps.get(3) {
            if let Ok(v) = single.as_str().parse::<u64>() {
                out.push(FrameRange { first: v, last: v });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse { text: text.into() });
    }
    Ok(out)
}

/// How frame indices map onto the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameTimebase {
    /// Frames sampled at a fixed rate; frame `i` covers `[i/fps, (i+1)/fps)`.
    Dense { fps: f64 },
    /// A fixed number of frames sampled uniformly over the whole video;
    /// frame `k` covers one inter-sample stride `duration / n_frames`.
    Uniform { n_frames: u64 },
}

/// Whether the model counts frames from 0 or from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameIndexBase {
    #[default]
    Zero,
    One,
}

/// Maps frame ranges to time ranges under the given timebase. Each frame
/// covers one full sampling stride; the final stride is clamped to the
/// video duration with a warning.
pub fn frames_to_time(
    frames: &[FrameRange],
    timebase: FrameTimebase,
    index_base: FrameIndexBase,
    video_duration_s: f64,
) -> Result<ParseOutcome> {
    if !video_duration_s.is_finite() || video_duration_s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "video duration must be positive and finite, got {video_duration_s}"
        )));
    }
    let n_frames = match timebase {
        FrameTimebase::Dense { fps } => {
            if !fps.is_finite() || fps <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "fps must be positive and finite, got {fps}"
                )));
            }
            ((video_duration_s * fps).ceil() as u64).max(1)
        }
        FrameTimebase::Uniform { n_frames } => {
            if n_frames == 0 {
                return Err(Error::InvalidInput("n_frames must be at least 1".into()));
            }
            n_frames
        }
    };

    // Validate all indices before converting any of them.
    let mut offenders = Vec::new();
    let mut converted = Vec::with_capacity(frames.len());
    for f in frames {
        let (lo, hi) = (f.first.min(f.last), f.first.max(f.last));
        let shifted = match index_base {
            FrameIndexBase::Zero => Some((lo, hi)),
            FrameIndexBase::One => match (lo.checked_sub(1), hi.checked_sub(1)) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            },
        };
        match shifted {
            Some((a, b)) if b < n_frames => converted.push((a, b)),
            Some(_) => offenders.push(hi),
            None => offenders.push(lo),
        }
    }
    if !offenders.is_empty() {
        return Err(Error::FrameIndexOutOfRange {
            indices: offenders,
            n_frames,
        });
    }

    let mut warnings = Vec::new();
    let mut pairs = Vec::with_capacity(converted.len());
    for (a, b) in converted {
        let (start, mut end) = match timebase {
            FrameTimebase::Dense { fps } => (a as f64 / fps, (b + 1) as f64 / fps),
            FrameTimebase::Uniform { .. } => {
                let stride = video_duration_s / n_frames as f64;
                (a as f64 * stride, (b + 1) as f64 * stride)
            }
        };
        if end > video_duration_s {
            warnings.push(format!(
                "frame {b} extends past the video end; clamped {end:.3}s to {video_duration_s:.3}s"
            ));
            end = video_duration_s;
        }
        pairs.push((start, end));
    }
    Ok(ParseOutcome {
        ranges: RangeSet::normalize(&pairs, 0.0)?,
        warnings,
    })
}

// Endpoint grammar: h:mm:ss, m:ss, or bare seconds, each with an optional
// fractional part on the final component.
const TS: &str = r"\d+:\d{1,2}:\d{1,2}(?:\.\d+)?|\d+:\d{1,2}(?:\.\d+)?|\d+(?:\.\d+)?";

static RANGE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)({TS})[ \t]*(?:[-\u{{2013}}\u{{2014}}~]|to)[ \t]*({TS})"
    ))
    .expect("static regex compiles")
});

fn clock_to_seconds(token: &str) -> Option<f64> {
    let mut total = 0.0_f64;
    let parts: Vec<&str> = token.split(':').collect();
    if parts.is_empty() || parts.len() > 3 {
        return None;
    }
    for part in &parts {
        let v: f64 = part.parse().ok()?;
        total = total * 60.0 + v;
    }
    total.is_finite().then_some(total)
}

/// Extracts every `start<sep>end` timestamp range from free-form text.
///
/// Endpoints may be bare seconds, `mm:ss`, or `hh:mm:ss`; separators are
/// `-`, en/em dashes, `~`, or `to`; list items split on commas,
/// semicolons, and newlines. Prose around the ranges is ignored with a
/// warning. Endpoints beyond the video duration are clamped with a
/// warning. Fails only when no range at all can be extracted.
pub fn parse_timestamps(text: &str, video_duration_s: f64) -> Result<ParseOutcome> {
    if !video_duration_s.is_finite() || video_duration_s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "video duration must be positive and finite, got {video_duration_s}"
        )));
    }
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for fragment in text.split(['\n', ',', ';']) {
        let mut consumed = vec![false; fragment.len()];
        for caps in RANGE_RE.captures_iter(fragment) {
            let whole = caps.get(0).expect("match has a whole span");
            consumed[whole.start()..whole.end()]
                .iter_mut()
                .for_each(|b| *b = true);
            let (Some(start), Some(end)) = (
                clock_to_seconds(&caps[1]).filter(|v| v.is_finite()),
                clock_to_seconds(&caps[2]).filter(|v| v.is_finite()),
            ) else {
                warnings.push(format!("could not read endpoints in {:?}", whole.as_str()));
                continue;
            };
            let (mut start, mut end) = if start <= end {
                (start, end)
            } else {
                warnings.push(format!(
                    "reversed range {:?}; endpoints swapped",
                    whole.as_str()
                ));
                (end, start)
            };
            if end > video_duration_s {
                warnings.push(format!(
                    "range {:?} extends past the video end; clamped to {video_duration_s}s",
                    whole.as_str()
                ));
                end = video_duration_s;
                start = start.min(video_duration_s);
            }
            pairs.push((start, end));
        }
        let leftover: String = fragment
            .char_indices()
            .filter(|(i, _)| !consumed[*i])
            .map(|(_, c)| c)
            .collect();
        if leftover.chars().any(|c| c.is_alphanumeric()) {
            let trimmed = leftover.trim();
            let snippet: String = trimmed.chars().take(60).collect();
            warnings.push(format!("ignored text: {snippet:?}"));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Parse { text: text.into() });
    }
    Ok(ParseOutcome {
        ranges: RangeSet::normalize(&pairs, 0.0)?,
        warnings,
    })
}

/// Renders a range set as a `mm:ss-mm:ss, ...` list (hours appear as
/// `h:mm:ss`). With whole-second endpoints this round-trips exactly
/// through [`parse_timestamps`].
pub fn format_clock_ranges(ranges: &RangeSet) -> String {
    fn clock(seconds: f64) -> String {
        let total = seconds.round() as u64;
        let (h, m, s) = (total / 3600, (total % 3600) / 60, total % 60);
        if h > 0 {
            format!("{h}:{m:02}:{s:02}")
        } else {
            format!("{m:02}:{s:02}")
        }
    }
    ranges
        .ranges()
        .iter()
        .map(|r| format!("{}-{}", clock(r.start_s()), clock(r.end_s())))
        .collect::<Vec<_>>()
        .join(", ")
}
