use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use varauto::bridge::{serve, ServeOptions};
use varauto::control::Variant;
use varauto::harness::{emit_report, replay_log, run_batch, summarize, BatchResult, BatchSummary, Scenario, TrialResult};

#[derive(Parser)]
#[command(name = "varauto", version, about = "Mixed-initiative variable-autonomy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one headless trial and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// mi | caa-mi | teleop | autonomy (defaults to the scenario's variant)
        #[arg(long)]
        variant: Option<Variant>,
        /// Defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run paired seeds for several variants and write the aggregate report.
    Batch {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated variant list.
        #[arg(long, value_delimiter = ',', default_value = "mi,caa-mi")]
        variants: Vec<Variant>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed_base: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive trial metrics from a decision log.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Serve a live session to an operator console.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value_t = 1.0)]
        realtime_factor: f64,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for per-session decision logs and command recordings.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn print_summary(summary: &BatchSummary) {
    println!(
        "{:<9} {:>5} {:>5} {:>16} {:>14} {:>14} {:>14} {:>12}",
        "variant", "runs", "done", "time (s)", "switches", "ai switches", "items done", "unattended"
    );
    for v in &summary.variants {
        let m = &v.metrics;
        let f = |s: varauto::harness::Stats| format!("{:.2} ± {:.2}", s.mean, s.sd);
        println!(
            "{:<9} {:>5} {:>5} {:>16} {:>14} {:>14} {:>14} {:>12}",
            v.variant.as_str(),
            v.runs,
            v.completed,
            f(m.completion_time),
            f(m.loa_switches_total),
            f(m.loa_switches_ai),
            f(m.secondary_items_completed),
            format!("{:.2}", m.unattended_handovers.mean),
        );
        if !v.failed_seeds.is_empty() {
            println!("  failed seeds: {:?}", v.failed_seeds);
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Run {
            scenario,
            variant,
            seed,
            out,
        } => {
            let sc = load(&scenario)?;
            let variant = variant.unwrap_or(sc.file.variant);
            let seed = seed.unwrap_or(sc.file.seed);
            let trial = varauto::harness::run_trial(&sc, variant, seed)?;
            let metrics = serde_json::to_string_pretty(&trial.metrics)?;
            let batch = BatchResult {
                scenario: sc.name().to_string(),
                variants: vec![variant],
                seeds: vec![seed],
                trials: vec![TrialResult {
                    variant,
                    seed,
                    outcome: Ok(trial),
                }],
            };
            emit_report(&batch, &summarize(&batch), &out)?;
            println!("{metrics}");
        }
        Cmd::Batch {
            scenario,
            variants,
            runs,
            seed_base,
            out,
        } => {
            let sc = load(&scenario)?;
            let batch = run_batch(&sc, &variants, runs, seed_base)?;
            let summary = summarize(&batch);
            emit_report(&batch, &summary, &out)?;
            print_summary(&summary);
            for t in &batch.trials {
                if let Err(e) = &t.outcome {
                    eprintln!("{} seed {}: {e}", t.variant, t.seed);
                }
            }
        }
        Cmd::Replay { log } => {
            let metrics = replay_log(&log).with_context(|| format!("replaying {}", log.display()))?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Cmd::Serve {
            scenario,
            port,
            realtime_factor,
            variant,
            seed,
            record,
        } => {
            if realtime_factor.is_nan() || realtime_factor <= 0.0 {
                bail!("--realtime-factor must be positive");
            }
            let sc = load(&scenario)?;
            let opts = ServeOptions {
                variant: variant.unwrap_or(sc.file.variant),
                seed: seed.unwrap_or(sc.file.seed),
                realtime_factor,
                max_sessions: None,
                record_dir: record,
            };
            eprintln!("serving {} on 127.0.0.1:{port}", sc.name());
            serve(&sc, port, &opts)?;
        }
    }
    Ok(())
}
