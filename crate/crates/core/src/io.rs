//! File formats: ground-truth and prediction JSONL, candidate JSONL,
//! curve CSV, report JSON/Markdown, manifests, and training examples.
//!
//! Loaders report malformed lines with their line number and reject
//! duplicate ids; writers are deterministic so identical inputs produce
//! byte-identical outputs.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{MetricKind, RangeSet, SampleScores};
use crate::metrics::{curve, CurvePoint, QueryFormat, QueryModality, QueryRecord, Report};
use crate::parsers::{
    frames_to_time, parse_frame_ranges, parse_timestamps, FrameIndexBase, FrameTimebase,
};
use crate::postproc::{CandidateQuery, CandidateSource, DroppedCandidate, FilterReport};
use crate::synthgen::{SyntheticManifest, TrainingExample};

/// Parses non-blank JSONL lines, keeping each record's 1-based file
/// line number for error reporting.
fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: T = serde_json::from_str(&line).map_err(|e| Error::JsonLine {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, parsed));
    }
    Ok(out)
}

/// One ground-truth JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthLine {
    pub query_id: String,
    pub video_id: String,
    pub query: String,
    pub format: QueryFormat,
    pub modality: QueryModality,
    pub duration_s: f64,
    pub gt_ranges: Vec<(f64, f64)>,
}

/// Loads and validates benchmark records; ground-truth ranges are
/// normalized with a zero merge gap.
pub fn load_ground_truth(path: &Path) -> Result<Vec<QueryRecord>> {
    let lines: Vec<(usize, GroundTruthLine)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        if !seen.insert(line.query_id.clone()) {
            return Err(Error::Schema(format!(
                "duplicate query_id in {} line {line_no}: {}",
                path.display(),
                line.query_id
            )));
        }
        let gt = RangeSet::normalize(&line.gt_ranges, 0.0).map_err(|e| {
            Error::Schema(format!("query {}: {e}", line.query_id))
        })?;
        records.push(QueryRecord::new(
            line.query_id,
            line.video_id,
            line.query,
            line.format,
            line.modality,
            line.duration_s,
            gt,
        )?);
    }
    Ok(records)
}

/// `query_id → video_duration_s` lookup for prediction parsing.
pub fn duration_index(records: &[QueryRecord]) -> HashMap<String, f64> {
    records
        .iter()
        .map(|r| (r.query_id.clone(), r.video_duration_s))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PredictionLine {
    query_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranges: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_text: Option<String>,
}

/// A prediction read from JSONL: either pre-parsed ranges or raw model
/// output text.
#[derive(Debug, Clone)]
pub struct PredictionEntry {
    pub line: usize,
    pub query_id: String,
    pub payload: PredictionPayload,
}

#[derive(Debug, Clone)]
pub enum PredictionPayload {
    Ranges(Vec<(f64, f64)>),
    RawText(String),
}

/// Loads prediction lines, rejecting duplicates and lines that carry
/// both (or neither) of `ranges` and `raw_text`.
pub fn load_prediction_entries(path: &Path) -> Result<Vec<PredictionEntry>> {
    let lines: Vec<(usize, PredictionLine)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        if !seen.insert(line.query_id.clone()) {
            return Err(Error::Schema(format!(
                "duplicate query_id in {} line {line_no}: {}",
                path.display(),
                line.query_id
            )));
        }
        let payload = match (line.ranges, line.raw_text) {
            (Some(ranges), None) => PredictionPayload::Ranges(ranges),
            (None, Some(text)) => PredictionPayload::RawText(text),
            (None, None) => {
                return Err(Error::JsonLine {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!(
                        "prediction for {} carries neither ranges nor raw_text",
                        line.query_id
                    ),
                })
            }
            (Some(_), Some(_)) => {
                return Err(Error::JsonLine {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!(
                        "prediction for {} carries both ranges and raw_text",
                        line.query_id
                    ),
                })
            }
        };
        entries.push(PredictionEntry {
            line: line_no,
            query_id: line.query_id,
            payload,
        });
    }
    Ok(entries)
}

/// How to turn raw prediction text into time ranges.
#[derive(Debug, Clone)]
pub enum RawTextParser {
    /// Clock timestamps and bare seconds.
    Timestamps,
    /// Frame index ranges mapped through a timebase.
    Frames {
        timebase: FrameTimebase,
        index_base: FrameIndexBase,
    },
}

/// Canonical predictions in input order, plus parse/clamp warnings.
#[derive(Debug, Clone, Default)]
pub struct LoadedPredictions {
    pub entries: Vec<(String, RangeSet)>,
    pub warnings: Vec<String>,
}

impl LoadedPredictions {
    pub fn to_map(&self) -> HashMap<String, RangeSet> {
        self.entries.iter().cloned().collect()
    }
}

/// Converts prediction entries into canonical range sets. Pre-parsed
/// ranges that violate geometry are schema errors; raw text that fails
/// to parse becomes an empty prediction with a warning, so evaluation
/// can proceed over partial model output.
pub fn resolve_prediction_entries(
    entries: &[PredictionEntry],
    durations: &HashMap<String, f64>,
    merge_gap: f64,
    parser: &RawTextParser,
) -> Result<LoadedPredictions> {
    let mut out = LoadedPredictions::default();
    for entry in entries {
        match &entry.payload {
            PredictionPayload::Ranges(ranges) => {
                let set = RangeSet::normalize(ranges, merge_gap).map_err(|e| {
                    Error::Schema(format!("prediction for {}: {e}", entry.query_id))
                })?;
                out.entries.push((entry.query_id.clone(), set));
            }
            PredictionPayload::RawText(text) => {
                let Some(&duration) = durations.get(&entry.query_id) else {
                    out.warnings.push(format!(
                        "{}: no ground-truth duration; raw text ignored",
                        entry.query_id
                    ));
                    continue;
                };
                let parsed = match parser {
                    RawTextParser::Timestamps => parse_timestamps(text, duration),
                    RawTextParser::Frames {
                        timebase,
                        index_base,
                    } => parse_frame_ranges(text).and_then(|frames| {
                        frames_to_time(&frames, *timebase, *index_base, duration)
                    }),
                };
                match parsed {
                    Ok(outcome) => {
                        for w in outcome.warnings {
                            out.warnings.push(format!("{}: {w}", entry.query_id));
                        }
                        let set = if merge_gap > 0.0 {
                            outcome.ranges.renormalize(merge_gap)
                        } else {
                            outcome.ranges
                        };
                        out.entries.push((entry.query_id.clone(), set));
                    }
                    Err(e) => {
                        out.warnings
                            .push(format!("{}: {e}; scored as empty", entry.query_id));
                        out.entries.push((entry.query_id.clone(), RangeSet::empty()));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Writes canonical predictions as `{"query_id","ranges"}` JSONL.
pub fn write_predictions_jsonl(path: &Path, entries: &[(String, RangeSet)]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (query_id, ranges) in entries {
        let line = PredictionLine {
            query_id: query_id.clone(),
            ranges: Some(ranges.to_pairs()),
            raw_text: None,
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("serializable"))?;
    }
    Ok(())
}

/// Threshold sweep rows for the three metrics at a shared grid.
pub fn curve_rows(scores: &[SampleScores], grid_n: usize) -> Result<Vec<(f64, f64, f64, f64)>> {
    let p = curve(scores, MetricKind::Precision, grid_n)?;
    let r = curve(scores, MetricKind::Recall, grid_n)?;
    let i = curve(scores, MetricKind::Iou, grid_n)?;
    Ok(p
        .iter()
        .zip(&r)
        .zip(&i)
        .map(|((p, r), i): ((&CurvePoint, &CurvePoint), &CurvePoint)| {
            (p.threshold, p.accuracy, r.accuracy, i.accuracy)
        })
        .collect())
}

/// Writes `threshold,precision_acc,recall_acc,iou_acc` CSV.
pub fn write_curve_csv(path: &Path, rows: &[(f64, f64, f64, f64)]) -> Result<()> {
    let mut out = String::from("threshold,precision_acc,recall_acc,iou_acc\n");
    for (t, p, r, i) in rows {
        out.push_str(&format!("{t:.6},{p:.6},{r:.6},{i:.6}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the report as pretty JSON.
pub fn write_report_json(path: &Path, report: &Report) -> Result<()> {
    let mut body = serde_json::to_string_pretty(report).expect("serializable");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Writes the report as an aligned Markdown table.
pub fn write_report_markdown(path: &Path, report: &Report) -> Result<()> {
    fs::write(path, report.to_markdown())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CandidateLine {
    query: String,
    ranges: Vec<(f64, f64)>,
    confidence: f64,
    #[serde(default)]
    source: CandidateSource,
}

/// Loads post-processing candidates from JSONL.
pub fn load_candidates(path: &Path) -> Result<Vec<CandidateQuery>> {
    let lines: Vec<(usize, CandidateLine)> = read_jsonl(path)?;
    lines
        .into_iter()
        .map(|(line_no, l)| {
            CandidateQuery::new(l.query, &l.ranges, l.confidence, l.source).map_err(|e| {
                Error::Schema(format!("{} line {line_no}: {e}", path.display()))
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct KeptLine<'a> {
    query: &'a str,
    ranges: Vec<(f64, f64)>,
    confidence: f64,
    source: CandidateSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<QueryFormat>,
}

#[derive(Debug, Serialize)]
struct DroppedLine<'a> {
    query: &'a str,
    ranges: Vec<(f64, f64)>,
    confidence: f64,
    source: CandidateSource,
    reason: crate::postproc::DropReason,
}

/// Writes kept candidates (with classified formats) and dropped
/// candidates (with drop reasons) as JSONL.
pub fn write_filter_report(
    kept_path: &Path,
    dropped_path: &Path,
    report: &FilterReport,
    heuristics: &crate::postproc::FormatHeuristics,
) -> Result<()> {
    let mut kept = fs::File::create(kept_path)?;
    for q in &report.kept {
        let line = KeptLine {
            query: &q.query_text,
            ranges: q.ranges.to_pairs(),
            confidence: q.confidence,
            source: q.source,
            format: crate::postproc::classify_format(&q.query_text, heuristics).ok(),
        };
        writeln!(kept, "{}", serde_json::to_string(&line).expect("serializable"))?;
    }
    let mut dropped = fs::File::create(dropped_path)?;
    for DroppedCandidate { candidate, reason } in &report.dropped {
        let line = DroppedLine {
            query: &candidate.query_text,
            ranges: candidate.ranges.to_pairs(),
            confidence: candidate.confidence,
            source: candidate.source,
            reason: *reason,
        };
        writeln!(
            dropped,
            "{}",
            serde_json::to_string(&line).expect("serializable")
        )?;
    }
    Ok(())
}

/// Writes a synthetic manifest as pretty JSON.
pub fn write_manifest_json(path: &Path, manifest: &SyntheticManifest) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest).expect("serializable");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Reads a synthetic manifest back.
pub fn load_manifest_json(path: &Path) -> Result<SyntheticManifest> {
    let body = fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Writes training examples as `{"objective","prompt","target"}` JSONL.
pub fn write_training_examples(path: &Path, examples: &[TrainingExample]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for ex in examples {
        writeln!(out, "{}", serde_json::to_string(ex).expect("serializable"))?;
    }
    Ok(())
}
