//! Exact arithmetic over multi-span time ranges.
//!
//! Predictions and ground-truth annotations are sets of disjoint time
//! intervals on the second axis. [`RangeSet`] is the canonical form
//! (sorted, strictly disjoint); [`score`] computes the per-sample
//! precision / recall / IoU triple from interval measures.
//!
//! All arithmetic is plain `f64`; there are no epsilon comparisons apart
//! from the explicit `merge_gap` parameter of [`RangeSet::normalize`].

use crate::error::{Error, Result};

/// A single `[start_s, end_s]` interval in seconds.
///
/// Invariants: `0 <= start_s <= end_s`, both finite. Zero-width ranges
/// (`start_s == end_s`) are allowed and carry zero measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRange {
    start_s: f64,
    end_s: f64,
}

impl TimeRange {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !start_s.is_finite() || !end_s.is_finite() || start_s < 0.0 || start_s > end_s {
            return Err(Error::InvalidTimeRange { start_s, end_s });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A canonical set of time ranges: sorted ascending by start, strictly
/// disjoint (`a.end_s < b.start_s` for consecutive `a`, `b`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RangeSet {
    ranges: Vec<TimeRange>,
}

impl RangeSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates raw `(start, end)` pairs and merges overlaps: two ranges
    /// merge iff the gap between them is `<= merge_gap` seconds.
    ///
    /// Idempotent for any fixed gap. Invalid pairs are rejected with the
    /// offending input index.
    pub fn normalize(pairs: &[(f64, f64)], merge_gap: f64) -> Result<Self> {
        if !merge_gap.is_finite() || merge_gap < 0.0 {
            return Err(Error::InvalidInput(format!(
                "merge_gap must be finite and non-negative, got {merge_gap}"
            )));
        }
        let mut ranges = Vec::with_capacity(pairs.len());
        for (index, &(start_s, end_s)) in pairs.iter().enumerate() {
            match TimeRange::new(start_s, end_s) {
                Ok(r) => ranges.push(r),
                Err(_) => {
                    return Err(Error::InvalidRange {
                        index,
                        start_s,
                        end_s,
                    })
                }
            }
        }
        Ok(Self::sweep(ranges, merge_gap))
    }

    /// Re-runs the merge sweep on an already-valid set with a new gap.
    pub fn renormalize(&self, merge_gap: f64) -> Self {
        Self::sweep(self.ranges.clone(), merge_gap)
    }

    /// Sort-and-sweep merge over validated ranges.
    fn sweep(mut ranges: Vec<TimeRange>, merge_gap: f64) -> Self {
        ranges.sort_by(|a, b| {
            (a.start_s, a.end_s)
                .partial_cmp(&(b.start_s, b.end_s))
                .expect("validated ranges are finite")
        });
        let mut merged: Vec<TimeRange> = Vec::with_capacity(ranges.len());
        for r in ranges {
            match merged.last_mut() {
                Some(last) if r.start_s - last.end_s <= merge_gap => {
                    last.end_s = last.end_s.max(r.end_s);
                }
                _ => merged.push(r),
            }
        }
        Self { ranges: merged }
    }

    pub fn ranges(&self) -> &[TimeRange] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    /// Total covered duration in seconds. Zero-width ranges contribute 0.
    pub fn measure(&self) -> f64 {
        self.ranges.iter().map(TimeRange::duration_s).sum()
    }

    /// Endpoint pairs, for serialization.
    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.ranges.iter().map(|r| (r.start_s, r.end_s)).collect()
    }

    /// Pointwise set intersection. Touching intervals (zero-width overlap)
    /// produce nothing.
    pub fn intersect(&self, other: &RangeSet) -> RangeSet {
        let (a, b) = (&self.ranges, &other.ranges);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let start = a[i].start_s.max(b[j].start_s);
            let end = a[i].end_s.min(b[j].end_s);
            if start < end {
                out.push(TimeRange {
                    start_s: start,
                    end_s: end,
                });
            }
            if a[i].end_s <= b[j].end_s {
                i += 1;
            } else {
                j += 1;
            }
        }
        RangeSet { ranges: out }
    }

    /// Pointwise set union, re-normalized with `merge_gap = 0`.
    pub fn union(&self, other: &RangeSet) -> RangeSet {
        let mut all = self.ranges.clone();
        all.extend_from_slice(&other.ranges);
        Self::sweep(all, 0.0)
    }
}

/// Per-sample precision / recall / IoU over interval measures.
///
/// Conventions for degenerate inputs: exactly one empty (zero-measure)
/// side scores 0 everywhere; both sides empty scores 1 everywhere with
/// `degenerate` set. Zero-measure range sets are treated as empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScores {
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
    pub degenerate: bool,
}

impl SampleScores {
    pub fn metric(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Precision => self.precision,
            MetricKind::Recall => self.recall,
            MetricKind::Iou => self.iou,
        }
    }
}

/// Which of the three per-sample metrics to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Precision,
    Recall,
    Iou,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Precision, MetricKind::Recall, MetricKind::Iou];

    pub fn label(&self) -> &'static str {
        match self {
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::Iou => "iou",
        }
    }
}

/// Scores a normalized prediction against normalized ground truth:
/// `P = |pred ∩ gt| / |pred|`, `R = |pred ∩ gt| / |gt|`,
/// `IoU = |pred ∩ gt| / |pred ∪ gt|`.
pub fn score(pred: &RangeSet, gt: &RangeSet) -> SampleScores {
    let pred_measure = pred.measure();
    let gt_measure = gt.measure();
    if pred_measure == 0.0 && gt_measure == 0.0 {
        return SampleScores {
            precision: 1.0,
            recall: 1.0,
            iou: 1.0,
            degenerate: true,
        };
    }
    if pred_measure == 0.0 || gt_measure == 0.0 {
        return SampleScores {
            precision: 0.0,
            recall: 0.0,
            iou: 0.0,
            degenerate: false,
        };
    }
    let inter = pred.intersect(gt).measure();
    let union = pred.union(gt).measure();
    SampleScores {
        precision: inter / pred_measure,
        recall: inter / gt_measure,
        iou: if union > 0.0 { inter / union } else { 0.0 },
        degenerate: false,
    }
}
