use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Variant;
use crate::engine::RunMetrics;
use crate::error::{Error, Result};

use super::scenario::Scenario;
use super::trial::{run_trial, TrialOutput};

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub variant: Variant,
    pub seed: u64,
    pub outcome: std::result::Result<TrialOutput, String>,
}

impl TrialResult {
    pub fn metrics(&self) -> Option<&RunMetrics> {
        self.outcome.as_ref().ok().map(|o| &o.metrics)
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub scenario: String,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    /// Variant-major, then seed order.
    pub trials: Vec<TrialResult>,
}

impl BatchResult {
    pub fn for_variant(&self, v: Variant) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(move |t| t.variant == v)
    }
}

/// Runs `runs` seeds starting at `seed_base` for each variant. Every variant
/// uses the same seed list. Trials run in parallel; results are ordered
/// deterministically.
pub fn run_batch(scenario: &Scenario, variants: &[Variant], runs: usize, seed_base: u64) -> Result<BatchResult> {
    if runs == 0 {
        return Err(Error::Scenario("a batch needs at least one run".into()));
    }
    if variants.is_empty() {
        return Err(Error::Scenario("a batch needs at least one variant".into()));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed_base + i).collect();
    let jobs: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(variant, seed)| TrialResult {
            variant,
            seed,
            outcome: run_trial(scenario, variant, seed).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(BatchResult {
        scenario: scenario.name().to_string(),
        variants: variants.to_vec(),
        seeds,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub sd: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len();
        if n == 0 {
            return Stats::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Stats { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub completion_time: Stats,
    pub loa_switches_total: Stats,
    pub loa_switches_ai: Stats,
    pub loa_switches_human: Stats,
    pub time_in_teleop: Stats,
    pub time_in_autonomy: Stats,
    pub collisions: Stats,
    pub secondary_items_presented: Stats,
    pub secondary_items_completed: Stats,
    pub secondary_interruptions: Stats,
    pub unattended_handovers: Stats,
    pub odometry: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub runs: usize,
    pub completed: usize,
    pub failed_seeds: Vec<u64>,
    pub metrics: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub variants: Vec<VariantSummary>,
}

fn stat(ms: &[&RunMetrics], f: impl Fn(&RunMetrics) -> f64) -> Stats {
    Stats::of(&ms.iter().map(|m| f(m)).collect::<Vec<_>>())
}

/// Mean and SD of every metric per variant over the trials that ran.
pub fn summarize(batch: &BatchResult) -> BatchSummary {
    let variants = batch
        .variants
        .iter()
        .map(|&variant| {
            let trials: Vec<&TrialResult> = batch.for_variant(variant).collect();
            let ms: Vec<&RunMetrics> = trials.iter().filter_map(|t| t.metrics()).collect();
            VariantSummary {
                variant,
                runs: trials.len(),
                completed: ms.iter().filter(|m| m.completed).count(),
                failed_seeds: trials
                    .iter()
                    .filter(|t| t.outcome.is_err())
                    .map(|t| t.seed)
                    .collect(),
                metrics: MetricSummary {
                    completion_time: stat(&ms, |m| m.completion_time),
                    loa_switches_total: stat(&ms, |m| m.loa_switches_total as f64),
                    loa_switches_ai: stat(&ms, |m| m.loa_switches_ai as f64),
                    loa_switches_human: stat(&ms, |m| m.loa_switches_human as f64),
                    time_in_teleop: stat(&ms, |m| m.time_in_teleop),
                    time_in_autonomy: stat(&ms, |m| m.time_in_autonomy),
                    collisions: stat(&ms, |m| m.collisions as f64),
                    secondary_items_presented: stat(&ms, |m| m.secondary.items_presented as f64),
                    secondary_items_completed: stat(&ms, |m| m.secondary.items_completed as f64),
                    secondary_interruptions: stat(&ms, |m| m.secondary.interruptions as f64),
                    unattended_handovers: stat(&ms, |m| m.unattended_handovers as f64),
                    odometry: stat(&ms, |m| m.odometry),
                },
            }
        })
        .collect();
    BatchSummary {
        scenario: batch.scenario.clone(),
        seeds: batch.seeds.clone(),
        variants,
    }
}
