//! On-disk run records.
//!
//! Every run writes one `record.json` carrying the echoed configuration,
//! wall-clock timestamps, the library version, and the full numeric
//! result payload. Solve records additionally embed a residual
//! re-verification computed from the serialized-and-reloaded field, so a
//! record proves its own payload survived serialization.

use crate::config::RunConfig;
use chrono::{SecondsFormat, Utc};
use loglat_core::analysis::{CheckReport, SeriesReport};
use loglat_core::solver::{LevelComparison, MultiResult, SolveResult};
use serde::Serialize;

/// RFC 3339 UTC timestamp with millisecond precision.
pub fn timestamp_now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// The complete record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    /// Library version that produced the record.
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    /// The configuration as parsed (after any seed override).
    pub config: RunConfig,
    pub results: ActionResults,
}

/// Result payload per action kind.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionResults {
    Solve {
        result: SolveResult,
        /// Residual sup-norm recomputed after a JSON round trip of the
        /// result — must match `result.residual_sup` to the last bit for
        /// a faithful serialization.
        reverified_residual_sup: f64,
        /// |reverified − recorded|.
        reverification_drift: f64,
    },
    Multi {
        result: MultiResult,
        /// One reverified residual sup per returned solution.
        reverified_residual_sups: Vec<f64>,
    },
    Verify {
        reports: Vec<CheckReport>,
        all_satisfied: bool,
    },
    Appendix {
        report: SeriesReport,
    },
    Compare {
        comparison: LevelComparison,
    },
}
