//! Rule-based post-processing of generated (query, time-ranges,
//! confidence) candidates, plus the query-format classifier.
//!
//! Four rules run in a fixed order: merge nearby ranges, cut
//! low-confidence queries, cut overly general queries (too many ranges
//! after merging), and cut machine-style phrasing. A dropped candidate
//! records the first rule it failed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::RangeSet;
use crate::metrics::QueryFormat;

/// Where a candidate's supporting text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Caption,
    Subtitle,
    #[default]
    Mixed,
}

/// One generated query with its proposed time ranges and confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateQuery {
    pub query_text: String,
    pub ranges: RangeSet,
    pub confidence: f64,
    pub source: CandidateSource,
}

impl CandidateQuery {
    /// Validates confidence and range geometry. An empty range list is
    /// accepted here and dropped by the pipeline rather than erroring.
    pub fn new(
        query_text: impl Into<String>,
        raw_ranges: &[(f64, f64)],
        confidence: f64,
        source: CandidateSource,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) || !confidence.is_finite() {
            return Err(Error::Schema(format!(
                "confidence must lie in [0, 1], got {confidence}"
            )));
        }
        Ok(Self {
            query_text: query_text.into(),
            ranges: RangeSet::normalize(raw_ranges, 0.0)?,
            confidence,
            source,
        })
    }
}

/// Why a candidate was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    EmptyAfterMerge,
    LowConfidence,
    TooGeneral,
    MachineStyle,
}

/// A dropped candidate (ranges already merged) and the first rule it
/// failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCandidate {
    pub candidate: CandidateQuery,
    pub reason: DropReason,
}

/// Pipeline output: every input candidate lands in exactly one list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterReport {
    pub kept: Vec<CandidateQuery>,
    pub dropped: Vec<DroppedCandidate>,
}

impl FilterReport {
    pub fn total(&self) -> usize {
        self.kept.len() + self.dropped.len()
    }

    pub fn count_with_reason(&self, reason: DropReason) -> usize {
        self.dropped.iter().filter(|d| d.reason == reason).count()
    }
}

/// Pipeline thresholds. Defaults: 0.5 s merge gap, 0.9 confidence cut,
/// more than 10 merged ranges is too general, and the two stock
/// machine-style templates.
#[derive(Debug, Clone)]
pub struct PostprocConfig {
    pub merge_gap_s: f64,
    pub min_confidence: f64,
    pub max_ranges: usize,
    pub blocklist: Vec<String>,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        Self {
            merge_gap_s: 0.5,
            min_confidence: 0.9,
            max_ranges: 10,
            blocklist: default_blocklist(),
        }
    }
}

/// Stock machine-style phrases, matched case-insensitively anywhere in
/// the query.
pub fn default_blocklist() -> Vec<String> {
    vec![
        "the video concludes".to_string(),
        "in the closing moments".to_string(),
    ]
}

/// Rule 1: merge consecutive ranges separated by at most `gap_s`.
pub fn merge_rule(q: &CandidateQuery, gap_s: f64) -> CandidateQuery {
    CandidateQuery {
        ranges: q.ranges.renormalize(gap_s),
        ..q.clone()
    }
}

/// Rule 2: keep iff confidence is at least `threshold` ("below" drops).
pub fn confidence_rule(q: &CandidateQuery, threshold: f64) -> bool {
    q.confidence >= threshold
}

/// Rule 3: keep iff the (already merged) range count does not exceed
/// `max_ranges` ("more than" drops).
pub fn generality_rule(q: &CandidateQuery, max_ranges: usize) -> bool {
    q.ranges.len() <= max_ranges
}

/// Rule 4: keep iff no blocklisted phrase occurs in the query,
/// case-insensitively.
pub fn style_rule(q: &CandidateQuery, blocklist: &[String]) -> bool {
    let lowered = q.query_text.to_lowercase();
    !blocklist
        .iter()
        .any(|phrase| lowered.contains(&phrase.to_lowercase()))
}

/// Applies merge → confidence → generality → style in that order,
/// recording each drop under the first failing rule.
pub fn pipeline(candidates: &[CandidateQuery], config: &PostprocConfig) -> FilterReport {
    let mut report = FilterReport::default();
    for candidate in candidates {
        let merged = merge_rule(candidate, config.merge_gap_s);
        let reason = if merged.ranges.is_empty() {
            Some(DropReason::EmptyAfterMerge)
        } else if !confidence_rule(&merged, config.min_confidence) {
            Some(DropReason::LowConfidence)
        } else if !generality_rule(&merged, config.max_ranges) {
            Some(DropReason::TooGeneral)
        } else if !style_rule(&merged, &config.blocklist) {
            Some(DropReason::MachineStyle)
        } else {
            None
        };
        match reason {
            Some(reason) => report.dropped.push(DroppedCandidate {
                candidate: merged,
                reason,
            }),
            None => report.kept.push(merged),
        }
    }
    report
}

/// Thresholds of the query-format heuristic.
#[derive(Debug, Clone)]
pub struct FormatHeuristics {
    /// At most this many words (with no verb or function word) is a keyword.
    pub max_keyword_words: usize,
    /// At least this many words is a sentence regardless of structure.
    pub min_sentence_words: usize,
}

impl Default for FormatHeuristics {
    fn default() -> Self {
        Self {
            max_keyword_words: 4,
            min_sentence_words: 8,
        }
    }
}

const FINITE_VERB_MARKERS: &[&str] = &[
    "is", "are", "was", "were", "am", "has", "have", "had", "does", "did", "do", "will", "would",
    "can", "could", "shall", "should", "may", "might", "must",
];

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "in", "on", "at", "of", "with", "to", "for", "from", "by", "into", "over",
    "under", "his", "her", "its", "their", "this", "that", "these", "those",
];

/// Classifies a query as keyword, phrase, or sentence.
///
/// Sentences are long descriptions (at least `min_sentence_words`
/// words), anything with terminal punctuation, or anything containing a
/// finite-verb marker. Keywords are short bare terms: at most
/// `max_keyword_words` words with no function words. Everything else is
/// a phrase.
pub fn classify_format(query_text: &str, heuristics: &FormatHeuristics) -> Result<QueryFormat> {
    let trimmed = query_text.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidInput(
            "cannot classify an empty query".into(),
        ));
    }
    let words: Vec<String> = trimmed
        .split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect();
    let has_terminal_punctuation = trimmed.ends_with(['.', '!', '?']);
    let has_finite_verb = words
        .iter()
        .any(|w| FINITE_VERB_MARKERS.contains(&w.as_str()));
    if words.len() >= heuristics.min_sentence_words || has_terminal_punctuation || has_finite_verb
    {
        return Ok(QueryFormat::Sentence);
    }
    let has_function_word = words.iter().any(|w| FUNCTION_WORDS.contains(&w.as_str()));
    if words.len() <= heuristics.max_keyword_words && !has_function_word {
        return Ok(QueryFormat::Keyword);
    }
    Ok(QueryFormat::Phrase)
}
