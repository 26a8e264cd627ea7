//! Tooling for temporal retrieval over long multimodal videos: exact
//! multi-span interval arithmetic and metrics, AUC threshold sweeps,
//! robust timestamp/frame-range output parsers, a numerically verified
//! decomposed attention kernel, a seeded synthetic supervision planner,
//! and rule-based query post-processing.
//!
//! The per-sample flow from raw model output to scores:
//!
//! ```
//! use tempokit::intervals::{score, RangeSet};
//! use tempokit::parsers::parse_timestamps;
//!
//! let prediction = parse_timestamps("00:15-00:25, 00:50-00:55", 120.0)?;
//! let ground_truth = RangeSet::normalize(&[(10.0, 20.0), (50.0, 55.0)], 0.0)?;
//! let s = score(&prediction.ranges, &ground_truth);
//! assert_eq!(s.recall, 2.0 / 3.0);
//! assert_eq!(s.precision, 2.0 / 3.0);
//! assert_eq!(s.iou, 0.5);
//! # Ok::<(), tempokit::Error>(())
//! ```

pub mod dattn;
pub mod error;
pub mod intervals;
pub mod io;
pub mod metrics;
pub mod parsers;
pub mod postproc;
pub mod synthgen;

pub use error::{Error, Result};
