//! Seeded planner for synthetic timestamp-supervised training data.
//!
//! Source images are expanded into video segments by sliding a crop
//! window across them; audio clips are spliced end-to-end in a seeded
//! random order. The planner emits geometry and (timestamp, caption)
//! supervision pairs only — no pixels or waveforms are rendered.
//!
//! Segment boundaries are quantized to deciseconds so the timestamps
//! printed into training prompts (one decimal place) reproduce the
//! segment boundaries bit-exactly when parsed back.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner of the source image where the crop window starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartCorner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl StartCorner {
    pub const ALL: [StartCorner; 4] = [
        StartCorner::TopLeft,
        StartCorner::TopRight,
        StartCorner::BottomLeft,
        StartCorner::BottomRight,
    ];
}

/// Direction the crop window slides in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideDirection {
    Left,
    Right,
    Up,
    Down,
}

impl SlideDirection {
    pub const ALL: [SlideDirection; 4] = [
        SlideDirection::Left,
        SlideDirection::Right,
        SlideDirection::Up,
        SlideDirection::Down,
    ];
}

/// Parameters of one image-to-video expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlidingWindowParams {
    pub window_w: u32,
    pub window_h: u32,
    pub start_corner: StartCorner,
    pub direction: SlideDirection,
    pub speed_px_per_frame: u32,
    pub duration_s: f64,
}

/// One crop rectangle, in source-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// Per-frame crop rectangles for one synthetic video segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSchedule {
    pub source_image_id: String,
    pub rects: Vec<CropRect>,
}

/// Computes the per-frame crop rectangles for one source image. The
/// window stops at the image boundary rather than leaving it, so every
/// rect stays inside the image.
pub fn plan_sliding_window(
    source_image_id: impl Into<String>,
    image_w: u32,
    image_h: u32,
    params: &SlidingWindowParams,
    fps: f64,
) -> Result<CropSchedule> {
    if !fps.is_finite() || fps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "fps must be positive and finite, got {fps}"
        )));
    }
    if !params.duration_s.is_finite() || params.duration_s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "segment duration must be positive, got {}",
            params.duration_s
        )));
    }
    if params.window_w == 0 || params.window_h == 0 {
        return Err(Error::InvalidInput("window must be at least 1x1".into()));
    }
    if params.window_w > image_w || params.window_h > image_h {
        return Err(Error::InvalidInput(format!(
            "window {}x{} does not fit inside image {image_w}x{image_h}",
            params.window_w, params.window_h
        )));
    }
    let max_x = (image_w - params.window_w) as i64;
    let max_y = (image_h - params.window_h) as i64;
    let (mut x, mut y) = match params.start_corner {
        StartCorner::TopLeft => (0, 0),
        StartCorner::TopRight => (max_x, 0),
        StartCorner::BottomLeft => (0, max_y),
        StartCorner::BottomRight => (max_x, max_y),
    };
    let (dx, dy) = match params.direction {
        SlideDirection::Left => (-(params.speed_px_per_frame as i64), 0),
        SlideDirection::Right => (params.speed_px_per_frame as i64, 0),
        SlideDirection::Up => (0, -(params.speed_px_per_frame as i64)),
        SlideDirection::Down => (0, params.speed_px_per_frame as i64),
    };
    let n_frames = (params.duration_s * fps).ceil() as usize;
    let mut rects = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        rects.push(CropRect {
            x: x as u32,
            y: y as u32,
            w: params.window_w,
            h: params.window_h,
        });
        x = (x + dx).clamp(0, max_x);
        y = (y + dy).clamp(0, max_y);
    }
    Ok(CropSchedule {
        source_image_id: source_image_id.into(),
        rects,
    })
}

/// Which stream a synthetic manifest exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveModality {
    Visual,
    Audio,
}

impl ActiveModality {
    pub fn padded_counterpart(&self) -> ActiveModality {
        match self {
            ActiveModality::Visual => ActiveModality::Audio,
            ActiveModality::Audio => ActiveModality::Visual,
        }
    }
}

/// One captioned span of the synthetic timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSegment {
    pub modality: ActiveModality,
    pub source_id: String,
    pub caption: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// A fully deterministic plan for one synthetic training video: ordered
/// segments tiling `[0, total_duration_s)`, with exactly one active
/// modality (the other is padded with empty tokens at training time),
/// plus crop schedules for visual manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticManifest {
    pub seed: u64,
    pub active_modality: ActiveModality,
    pub padded_modality: ActiveModality,
    pub total_duration_s: f64,
    pub segments: Vec<ManifestSegment>,
    pub crop_schedules: Vec<CropSchedule>,
}

/// A source image available to the visual planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualItem {
    pub image_id: String,
    pub caption: String,
    pub width: u32,
    pub height: u32,
}

/// A captioned audio clip available to the audio planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    pub clip_id: String,
    pub length_s: f64,
    pub caption: String,
}

/// Segment duration bounds for visual planning, in seconds.
pub const SEGMENT_DURATION_RANGE_S: (f64, f64) = (5.0, 30.0);

fn deciseconds(v: f64) -> u64 {
    (v * 10.0).round() as u64
}

fn seconds(ds: u64) -> f64 {
    ds as f64 / 10.0
}

/// Splices audio clips end-to-end in a seeded random order. Segment
/// offsets are exact prefix sums of the clip lengths (quantized to
/// deciseconds, matching the precision of rendered supervision).
pub fn splice_audio(clips: &[AudioClip], seed: u64) -> Result<SyntheticManifest> {
    if clips.is_empty() {
        return Err(Error::InvalidInput(
            "cannot splice an empty clip list".into(),
        ));
    }
    let mut lengths_ds = Vec::with_capacity(clips.len());
    for clip in clips {
        if !clip.length_s.is_finite() || clip.length_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "clip {} has non-positive length {}",
                clip.clip_id, clip.length_s
            )));
        }
        let ds = deciseconds(clip.length_s);
        if ds == 0 {
            return Err(Error::InvalidInput(format!(
                "clip {} is shorter than the 0.1 s timestamp resolution",
                clip.clip_id
            )));
        }
        lengths_ds.push(ds);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..clips.len()).collect();
    order.shuffle(&mut rng);

    let mut segments = Vec::with_capacity(clips.len());
    let mut cursor_ds = 0u64;
    for &idx in &order {
        let start = cursor_ds;
        cursor_ds += lengths_ds[idx];
        segments.push(ManifestSegment {
            modality: ActiveModality::Audio,
            source_id: clips[idx].clip_id.clone(),
            caption: clips[idx].caption.clone(),
            start_s: seconds(start),
            end_s: seconds(cursor_ds),
        });
    }
    Ok(SyntheticManifest {
        seed,
        active_modality: ActiveModality::Audio,
        padded_modality: ActiveModality::Visual,
        total_duration_s: seconds(cursor_ds),
        segments,
        crop_schedules: Vec::new(),
    })
}

/// Expands each source image into a sliding-window segment with seeded
/// random parameters (square window of 25–75% of the shorter image
/// side, uniform corner and direction, speed up to 5% of the travel
/// axis per frame, duration uniform in 5–30 s), tiling the timeline in
/// item order.
pub fn assemble_visual(items: &[VisualItem], seed: u64, fps: f64) -> Result<SyntheticManifest> {
    if items.is_empty() {
        return Err(Error::InvalidInput(
            "cannot assemble an empty item list".into(),
        ));
    }
    if !fps.is_finite() || fps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "fps must be positive and finite, got {fps}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::with_capacity(items.len());
    let mut schedules = Vec::with_capacity(items.len());
    let mut cursor_ds = 0u64;
    let (lo_ds, hi_ds) = (
        deciseconds(SEGMENT_DURATION_RANGE_S.0),
        deciseconds(SEGMENT_DURATION_RANGE_S.1),
    );
    for item in items {
        if item.width == 0 || item.height == 0 {
            return Err(Error::InvalidInput(format!(
                "image {} has a zero dimension",
                item.image_id
            )));
        }
        let duration_ds = rng.random_range(lo_ds..=hi_ds);
        let shorter = item.width.min(item.height);
        let side = rng.random_range(shorter / 4..=(3 * shorter) / 4).max(1);
        let corner = StartCorner::ALL[rng.random_range(0..StartCorner::ALL.len())];
        let direction = SlideDirection::ALL[rng.random_range(0..SlideDirection::ALL.len())];
        let travel_axis = match direction {
            SlideDirection::Left | SlideDirection::Right => item.width,
            SlideDirection::Up | SlideDirection::Down => item.height,
        };
        let speed = rng.random_range(0..=(travel_axis / 20));
        let params = SlidingWindowParams {
            window_w: side,
            window_h: side,
            start_corner: corner,
            direction,
            speed_px_per_frame: speed,
            duration_s: seconds(duration_ds),
        };
        schedules.push(plan_sliding_window(
            item.image_id.clone(),
            item.width,
            item.height,
            &params,
            fps,
        )?);
        let start = cursor_ds;
        cursor_ds += duration_ds;
        segments.push(ManifestSegment {
            modality: ActiveModality::Visual,
            source_id: item.image_id.clone(),
            caption: item.caption.clone(),
            start_s: seconds(start),
            end_s: seconds(cursor_ds),
        });
    }
    Ok(SyntheticManifest {
        seed,
        active_modality: ActiveModality::Visual,
        padded_modality: ActiveModality::Audio,
        total_duration_s: seconds(cursor_ds),
        segments,
        crop_schedules: schedules,
    })
}

/// Seeded stand-in source images for planning runs without a real
/// corpus: deterministic dimensions, ids, and captions.
pub fn placeholder_visual_items(seed: u64, n: usize) -> Vec<VisualItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x76697375); // distinct stream from the planner
    (0..n)
        .map(|i| VisualItem {
            image_id: format!("image_{i:04}"),
            caption: format!("synthetic visual sample {i}"),
            width: rng.random_range(640..=1920),
            height: rng.random_range(480..=1080),
        })
        .collect()
}

/// Seeded stand-in audio clips (lengths 1–30 s at 0.1 s resolution).
pub fn placeholder_audio_clips(seed: u64, n: usize) -> Vec<AudioClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x61756469);
    (0..n)
        .map(|i| AudioClip {
            clip_id: format!("clip_{i:04}"),
            length_s: seconds(rng.random_range(10..=300)),
            caption: format!("synthetic audio sample {i}"),
        })
        .collect()
}

/// The two complementary supervision objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    CaptionPrediction,
    TimestampLocalization,
}

/// One prompt/target training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub objective: Objective,
    pub prompt: String,
    pub target: String,
}

fn render_range(start_s: f64, end_s: f64) -> String {
    format!("{start_s:.1}-{end_s:.1}")
}

/// Emits two training examples per segment: caption prediction (time
/// range in the prompt, caption as target) and timestamp localization
/// (caption in the prompt, time range as target). Time ranges render
/// with one decimal place.
pub fn emit_tasks(manifest: &SyntheticManifest) -> Vec<TrainingExample> {
    let mut out = Vec::with_capacity(manifest.segments.len() * 2);
    for segment in &manifest.segments {
        let range = render_range(segment.start_s, segment.end_s);
        out.push(TrainingExample {
            objective: Objective::CaptionPrediction,
            prompt: format!("Describe what happens during {range}."),
            target: segment.caption.clone(),
        });
        out.push(TrainingExample {
            objective: Objective::TimestampLocalization,
            prompt: format!("Find the time range matching: {}", segment.caption),
            target: range,
        });
    }
    out
}
