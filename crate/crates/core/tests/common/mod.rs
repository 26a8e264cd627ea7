//! Shared test oracles.

// Each test target uses a different subset of these helpers.
#![allow(dead_code)]

/// Brute-force per-millisecond bitmap over the time axis. Cell `i`
/// covers `[i, i+1)` ms, so an interval `[a, b]` with integer
/// millisecond endpoints occupies cells `a..b`. Set algebra becomes
/// boolean algebra over cells, which is an independent route to
/// normalize / intersect / union / measure.
pub struct MsBitmap {
    cells: Vec<bool>,
}

impl MsBitmap {
    pub fn from_ms_pairs(pairs: &[(u64, u64)], horizon_ms: u64) -> Self {
        let mut cells = vec![false; horizon_ms as usize];
        for &(start, end) in pairs {
            for cell in cells.iter_mut().take(end as usize).skip(start as usize) {
                *cell = true;
            }
        }
        Self { cells }
    }

    pub fn and(&self, other: &MsBitmap) -> MsBitmap {
        MsBitmap {
            cells: self
                .cells
                .iter()
                .zip(&other.cells)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn or(&self, other: &MsBitmap) -> MsBitmap {
        MsBitmap {
            cells: self
                .cells
                .iter()
                .zip(&other.cells)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn count_ms(&self) -> u64 {
        self.cells.iter().filter(|c| **c).count() as u64
    }

    /// Maximal occupied runs as `[start_ms, end_ms]` interval pairs.
    pub fn runs_ms(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut open: Option<u64> = None;
        for (i, cell) in self.cells.iter().enumerate() {
            match (open, *cell) {
                (None, true) => open = Some(i as u64),
                (Some(start), false) => {
                    out.push((start, i as u64));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(start) = open {
            out.push((start, self.cells.len() as u64));
        }
        out
    }

    /// Runs joined when separated by at most `gap_ms` empty cells.
    pub fn runs_with_gap_ms(&self, gap_ms: u64) -> Vec<(u64, u64)> {
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (start, end) in self.runs_ms() {
            match merged.last_mut() {
                Some(last) if start - last.1 <= gap_ms => last.1 = end,
                _ => merged.push((start, end)),
            }
        }
        merged
    }

    /// Runs converted to seconds with the same ms→f64 conversion the
    /// implementation inputs use.
    pub fn runs_seconds(&self) -> Vec<(f64, f64)> {
        self.runs_ms()
            .into_iter()
            .map(|(s, e)| (ms_to_s(s), ms_to_s(e)))
            .collect()
    }
}

pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

pub fn pairs_to_seconds(pairs: &[(u64, u64)]) -> Vec<(f64, f64)> {
    pairs
        .iter()
        .map(|&(s, e)| (ms_to_s(s), ms_to_s(e)))
        .collect()
}
