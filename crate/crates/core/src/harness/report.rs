use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::Variant;
use crate::engine::write_log;
use crate::error::{Error, Result};

use super::batch::{BatchResult, BatchSummary, TrialResult};

/// One CSV row per trial. Metric columns are empty for trials that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub variant: Variant,
    pub seed: u64,
    pub completed: Option<bool>,
    pub completion_time: Option<f64>,
    pub ticks: Option<u64>,
    pub loa_switches_total: Option<u32>,
    pub loa_switches_ai: Option<u32>,
    pub loa_switches_human: Option<u32>,
    pub time_in_teleop: Option<f64>,
    pub time_in_autonomy: Option<f64>,
    pub collisions: Option<u32>,
    pub secondary_items_presented: Option<u32>,
    pub secondary_items_completed: Option<u32>,
    pub secondary_interruptions: Option<u32>,
    pub unattended_handovers: Option<u32>,
    pub odometry: Option<f64>,
    pub reason: Option<String>,
    pub error: Option<String>,
}

impl TrialRow {
    pub const COLUMNS: [&'static str; 18] = [
        "variant",
        "seed",
        "completed",
        "completion_time",
        "ticks",
        "loa_switches_total",
        "loa_switches_ai",
        "loa_switches_human",
        "time_in_teleop",
        "time_in_autonomy",
        "collisions",
        "secondary_items_presented",
        "secondary_items_completed",
        "secondary_interruptions",
        "unattended_handovers",
        "odometry",
        "reason",
        "error",
    ];

    pub fn from_trial(t: &TrialResult) -> TrialRow {
        let m = t.metrics();
        TrialRow {
            variant: t.variant,
            seed: t.seed,
            completed: m.map(|m| m.completed),
            completion_time: m.map(|m| m.completion_time),
            ticks: m.map(|m| m.ticks),
            loa_switches_total: m.map(|m| m.loa_switches_total),
            loa_switches_ai: m.map(|m| m.loa_switches_ai),
            loa_switches_human: m.map(|m| m.loa_switches_human),
            time_in_teleop: m.map(|m| m.time_in_teleop),
            time_in_autonomy: m.map(|m| m.time_in_autonomy),
            collisions: m.map(|m| m.collisions),
            secondary_items_presented: m.map(|m| m.secondary.items_presented),
            secondary_items_completed: m.map(|m| m.secondary.items_completed),
            secondary_interruptions: m.map(|m| m.secondary.interruptions),
            unattended_handovers: m.map(|m| m.unattended_handovers),
            odometry: m.map(|m| m.odometry),
            reason: m.and_then(|m| m.reason.clone()),
            error: t.outcome.as_ref().err().cloned(),
        }
    }
}

pub fn trials_csv(batch: &BatchResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(TrialRow::COLUMNS)?;
    for t in &batch.trials {
        w.serialize(TrialRow::from_trial(t))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TrialRow::COLUMNS {
        return Err(Error::Report(format!("unexpected columns {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn log_file_name(variant: Variant, seed: u64) -> String {
    format!("{}_{seed}.jsonl", variant.as_str())
}

/// Writes `trials.csv`, `summary.json` and `logs/<variant>_<seed>.jsonl`
/// under `out_dir`.
pub fn emit_report(batch: &BatchResult, summary: &BatchSummary, out_dir: &Path) -> Result<()> {
    let logs = out_dir.join("logs");
    fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
    let write = |path: &Path, bytes: &[u8]| fs::write(path, bytes).map_err(|e| Error::io(path, e));
    write(&out_dir.join("trials.csv"), trials_csv(batch)?.as_bytes())?;
    let mut json = serde_json::to_vec_pretty(summary)?;
    json.push(b'\n');
    write(&out_dir.join("summary.json"), &json)?;
    for t in &batch.trials {
        if let Ok(out) = &t.outcome {
            let mut buf = Vec::new();
            write_log(&out.log, &mut buf)?;
            write(&logs.join(log_file_name(t.variant, t.seed)), &buf)?;
        }
    }
    Ok(())
}
