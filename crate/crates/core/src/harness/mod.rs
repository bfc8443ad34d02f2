//! Scenarios, headless trials, paired batches and report files.

mod batch;
mod report;
mod scenario;
mod trial;

use std::io::BufReader;
use std::path::Path;

pub use batch::{run_batch, summarize, BatchResult, BatchSummary, MetricSummary, Stats, TrialResult, VariantSummary};
pub use report::{emit_report, log_file_name, parse_trials_csv, trials_csv, TrialRow};
pub use scenario::{DegradationSpec, Placement, Scenario, ScenarioFile};
pub use trial::{run_trial, TrialOutput};

use crate::engine::{derive_metrics, read_log, RunMetrics};
use crate::error::{Error, Result};

/// Re-derives trial metrics from a decision log file.
pub fn replay_log(path: &Path) -> Result<RunMetrics> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    derive_metrics(&read_log(BufReader::new(f))?)
}
