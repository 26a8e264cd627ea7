//! Dataset-level evaluation: per-query scoring, accuracy-threshold
//! curves, AUC aggregation, and attribute-sliced reports.
//!
//! The headline numbers are the areas under the accuracy-threshold
//! curves of precision, recall, and IoU. For a metric value `X ∈ [0, 1]`
//! the identity `∫₀¹ Pr[X ≥ τ] dτ = E[X]` ties the AUC back to the plain
//! mean as the threshold grid is refined; the suite tests that identity
//! rather than assuming a particular integration rule.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{score, MetricKind, RangeSet, SampleScores};

/// Query granularity: bare terms, a short description, or full sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryFormat {
    Keyword,
    Phrase,
    Sentence,
}

impl QueryFormat {
    pub const ALL: [QueryFormat; 3] = [
        QueryFormat::Keyword,
        QueryFormat::Phrase,
        QueryFormat::Sentence,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            QueryFormat::Keyword => "keyword",
            QueryFormat::Phrase => "phrase",
            QueryFormat::Sentence => "sentence",
        }
    }
}

/// Which input streams a query needs to be localized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryModality {
    Vision,
    Audio,
    VisionAudio,
}

impl QueryModality {
    pub const ALL: [QueryModality; 3] = [
        QueryModality::Vision,
        QueryModality::Audio,
        QueryModality::VisionAudio,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            QueryModality::Vision => "vision",
            QueryModality::Audio => "audio",
            QueryModality::VisionAudio => "vision_audio",
        }
    }
}

/// One benchmark row: a query plus its manually annotated time ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub video_id: String,
    pub query_text: String,
    pub format: QueryFormat,
    pub modality: QueryModality,
    pub video_duration_s: f64,
    pub gt: RangeSet,
}

impl QueryRecord {
    /// Validates that ground truth is nonempty and inside `[0, duration]`.
    pub fn new(
        query_id: impl Into<String>,
        video_id: impl Into<String>,
        query_text: impl Into<String>,
        format: QueryFormat,
        modality: QueryModality,
        video_duration_s: f64,
        gt: RangeSet,
    ) -> Result<Self> {
        let query_id = query_id.into();
        if !video_duration_s.is_finite() || video_duration_s <= 0.0 {
            return Err(Error::Schema(format!(
                "query {query_id}: duration_s must be positive, got {video_duration_s}"
            )));
        }
        if gt.is_empty() {
            return Err(Error::Schema(format!(
                "query {query_id}: ground truth must contain at least one range"
            )));
        }
        if let Some(r) = gt.ranges().iter().find(|r| r.end_s() > video_duration_s) {
            return Err(Error::Schema(format!(
                "query {query_id}: ground-truth range {:?}..{:?} exceeds duration {video_duration_s}",
                r.start_s(),
                r.end_s()
            )));
        }
        Ok(Self {
            query_id,
            video_id: video_id.into(),
            query_text: query_text.into(),
            format,
            modality,
            video_duration_s,
            gt,
        })
    }

    pub fn duration_bucket(&self) -> DurationBucket {
        DurationBucket::for_duration(self.video_duration_s)
            .expect("record duration validated positive")
    }
}

/// Video-length category. The five buckets partition `(0, ∞)` with
/// left-inclusive boundaries at 60, 600, 1800, and 3600 seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationBucket {
    UltraShort,
    Short,
    Medium,
    Long,
    UltraLong,
}

impl DurationBucket {
    pub const ALL: [DurationBucket; 5] = [
        DurationBucket::UltraShort,
        DurationBucket::Short,
        DurationBucket::Medium,
        DurationBucket::Long,
        DurationBucket::UltraLong,
    ];

    const BOUNDARIES_S: [f64; 4] = [60.0, 600.0, 1800.0, 3600.0];

    /// Buckets a positive duration; boundary values land in the upper bucket.
    pub fn for_duration(duration_s: f64) -> Result<Self> {
        if !duration_s.is_finite() || duration_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "duration must be positive and finite, got {duration_s}"
            )));
        }
        let b = Self::BOUNDARIES_S;
        Ok(if duration_s < b[0] {
            DurationBucket::UltraShort
        } else if duration_s < b[1] {
            DurationBucket::Short
        } else if duration_s < b[2] {
            DurationBucket::Medium
        } else if duration_s < b[3] {
            DurationBucket::Long
        } else {
            DurationBucket::UltraLong
        })
    }

    /// `[lower, upper)` bounds in seconds; the last bucket is unbounded.
    pub fn bounds_s(&self) -> (f64, f64) {
        match self {
            DurationBucket::UltraShort => (0.0, 60.0),
            DurationBucket::Short => (60.0, 600.0),
            DurationBucket::Medium => (600.0, 1800.0),
            DurationBucket::Long => (1800.0, 3600.0),
            DurationBucket::UltraLong => (3600.0, f64::INFINITY),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DurationBucket::UltraShort => "ultra_short",
            DurationBucket::Short => "short",
            DurationBucket::Medium => "medium",
            DurationBucket::Long => "long",
            DurationBucket::UltraLong => "ultra_long",
        }
    }
}

/// One scored query.
#[derive(Debug, Clone)]
pub struct EvaluatedSample {
    pub query: QueryRecord,
    pub scores: SampleScores,
    /// True when no prediction was supplied, which scores as empty.
    pub missing_prediction: bool,
}

/// Scores every query against the prediction map. Queries with no entry
/// in `preds` are scored as empty predictions and flagged. Output is
/// ordered by `query_id`.
pub fn evaluate(
    queries: &[QueryRecord],
    preds: &HashMap<String, RangeSet>,
) -> Result<Vec<EvaluatedSample>> {
    let mut seen = HashSet::with_capacity(queries.len());
    for q in queries {
        if !seen.insert(q.query_id.as_str()) {
            return Err(Error::Schema(format!(
                "duplicate query_id in ground truth: {}",
                q.query_id
            )));
        }
    }
    let empty = RangeSet::empty();
    let mut out: Vec<EvaluatedSample> = queries
        .iter()
        .map(|q| {
            let pred = preds.get(&q.query_id);
            EvaluatedSample {
                query: q.clone(),
                scores: score(pred.unwrap_or(&empty), &q.gt),
                missing_prediction: pred.is_none(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.query.query_id.cmp(&b.query.query_id));
    Ok(out)
}

/// One point of an accuracy-threshold curve: the fraction of samples
/// whose metric is `>= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub accuracy: f64,
}

/// Sweeps a uniform threshold grid `{k / (grid_n - 1)}` over `[0, 1]`.
pub fn curve(scores: &[SampleScores], metric: MetricKind, grid_n: usize) -> Result<Vec<CurvePoint>> {
    if scores.is_empty() {
        return Err(Error::EmptyDataset(
            "cannot sweep thresholds over zero samples".into(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::InvalidInput(format!(
            "grid_n must be at least 2, got {grid_n}"
        )));
    }
    let mut values: Vec<f64> = scores.iter().map(|s| s.metric(metric)).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("metric values are finite"));
    let n = values.len() as f64;
    let steps = (grid_n - 1) as f64;
    Ok((0..grid_n)
        .map(|k| {
            let threshold = k as f64 / steps;
            // Count of values >= threshold via the first index not below it.
            let below = values.partition_point(|v| *v < threshold);
            CurvePoint {
                threshold,
                accuracy: (values.len() - below) as f64 / n,
            }
        })
        .collect())
}

/// Trapezoidal area under an accuracy-threshold curve on a uniform grid.
///
/// The weighted sum is accumulated first and divided once, so a constant
/// curve of 1.0 integrates to exactly 1.0.
pub fn auc(curve: &[CurvePoint]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::InvalidInput(
            "curve must contain at least two points".into(),
        ));
    }
    let steps = (curve.len() - 1) as f64;
    let tol = 1e-12;
    if curve[0].threshold.abs() > tol || (curve[curve.len() - 1].threshold - 1.0).abs() > tol {
        return Err(Error::InvalidInput(
            "curve thresholds must span [0, 1]".into(),
        ));
    }
    for (k, p) in curve.iter().enumerate() {
        if (p.threshold - k as f64 / steps).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "curve thresholds must form a uniform ascending grid; point {k} is {}",
                p.threshold
            )));
        }
    }
    let mut weighted = 0.0;
    for (k, p) in curve.iter().enumerate() {
        let w = if k == 0 || k == curve.len() - 1 {
            0.5
        } else {
            1.0
        };
        weighted += w * p.accuracy;
    }
    Ok(weighted / steps)
}

/// Axis along which a report row slices the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceAxis {
    Duration,
    Format,
    Modality,
}

impl SliceAxis {
    pub const ALL: [SliceAxis; 3] = [SliceAxis::Duration, SliceAxis::Format, SliceAxis::Modality];

    pub fn label(&self) -> &'static str {
        match self {
            SliceAxis::Duration => "duration",
            SliceAxis::Format => "format",
            SliceAxis::Modality => "modality",
        }
    }
}

/// AUC triple plus sample count for one slice of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceStats {
    pub n_queries: usize,
    pub precision_auc: f64,
    pub recall_auc: f64,
    pub iou_auc: f64,
}

/// One sliced row of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub axis: SliceAxis,
    pub slice: String,
    #[serde(flatten)]
    pub stats: SliceStats,
}

/// Attribute-sliced evaluation report. Slices with no queries are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub grid_n: usize,
    pub overall: SliceStats,
    pub rows: Vec<ReportRow>,
    pub missing_predictions: usize,
}

impl Report {
    /// Markdown table, column-aligned, with one row per populated slice
    /// plus the overall row.
    pub fn to_markdown(&self) -> String {
        let mut cells: Vec<[String; 6]> = Vec::with_capacity(self.rows.len() + 1);
        let mut push = |axis: &str, slice: &str, s: &SliceStats| {
            cells.push([
                axis.to_string(),
                slice.to_string(),
                s.n_queries.to_string(),
                format!("{:.6}", s.precision_auc),
                format!("{:.6}", s.recall_auc),
                format!("{:.6}", s.iou_auc),
            ]);
        };
        push("overall", "overall", &self.overall);
        for row in &self.rows {
            push(row.axis.label(), &row.slice, &row.stats);
        }
        let header = ["axis", "slice", "n_queries", "precision_auc", "recall_auc", "iou_auc"];
        let widths: Vec<usize> = header
            .iter()
            .enumerate()
            .map(|(c, h)| cells.iter().map(|row| row[c].len()).max().unwrap_or(0).max(h.len()))
            .collect();
        let mut out = String::new();
        let fmt_row = |fields: &[&str], widths: &[usize]| {
            let cols: Vec<String> = fields
                .iter()
                .zip(widths)
                .map(|(f, w)| format!("{f:<w$}"))
                .collect();
            format!("| {} |\n", cols.join(" | "))
        };
        out.push_str(&fmt_row(&header, &widths));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&format!("| {} |\n", rule.join(" | ")));
        for row in &cells {
            let fields: Vec<&str> = row.iter().map(String::as_str).collect();
            out.push_str(&fmt_row(&fields, &widths));
        }
        out
    }
}

fn slice_stats(scores: &[SampleScores], grid_n: usize) -> Result<SliceStats> {
    let auc_of = |metric| -> Result<f64> { auc(&curve(scores, metric, grid_n)?) };
    Ok(SliceStats {
        n_queries: scores.len(),
        precision_auc: auc_of(MetricKind::Precision)?,
        recall_auc: auc_of(MetricKind::Recall)?,
        iou_auc: auc_of(MetricKind::Iou)?,
    })
}

/// Builds the sliced report: duration buckets, query formats, and query
/// modalities, plus an overall row computed over the full dataset (not
/// an average of slice values).
pub fn report(evaluated: &[EvaluatedSample], grid_n: usize) -> Result<Report> {
    if evaluated.is_empty() {
        return Err(Error::EmptyDataset("cannot report on zero queries".into()));
    }
    let all: Vec<SampleScores> = evaluated.iter().map(|e| e.scores).collect();
    let overall = slice_stats(&all, grid_n)?;

    let mut rows = Vec::new();
    let mut by_bucket: BTreeMap<DurationBucket, Vec<SampleScores>> = BTreeMap::new();
    let mut by_format: BTreeMap<usize, Vec<SampleScores>> = BTreeMap::new();
    let mut by_modality: BTreeMap<usize, Vec<SampleScores>> = BTreeMap::new();
    for e in evaluated {
        by_bucket
            .entry(e.query.duration_bucket())
            .or_default()
            .push(e.scores);
        let f_idx = QueryFormat::ALL
            .iter()
            .position(|f| *f == e.query.format)
            .expect("format is one of the three variants");
        by_format.entry(f_idx).or_default().push(e.scores);
        let m_idx = QueryModality::ALL
            .iter()
            .position(|m| *m == e.query.modality)
            .expect("modality is one of the three variants");
        by_modality.entry(m_idx).or_default().push(e.scores);
    }

    for bucket in DurationBucket::ALL {
        if let Some(scores) = by_bucket.get(&bucket) {
            rows.push(ReportRow {
                axis: SliceAxis::Duration,
                slice: bucket.label().to_string(),
                stats: slice_stats(scores, grid_n)?,
            });
        }
    }
    for (idx, format) in QueryFormat::ALL.iter().enumerate() {
        if let Some(scores) = by_format.get(&idx) {
            rows.push(ReportRow {
                axis: SliceAxis::Format,
                slice: format.label().to_string(),
                stats: slice_stats(scores, grid_n)?,
            });
        }
    }
    for (idx, modality) in QueryModality::ALL.iter().enumerate() {
        if let Some(scores) = by_modality.get(&idx) {
            rows.push(ReportRow {
                axis: SliceAxis::Modality,
                slice: modality.label().to_string(),
                stats: slice_stats(scores, grid_n)?,
            });
        }
    }

    Ok(Report {
        grid_n,
        overall,
        rows,
        missing_predictions: evaluated.iter().filter(|e| e.missing_prediction).count(),
    })
}
