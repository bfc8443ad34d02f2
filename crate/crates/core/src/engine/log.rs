//! Per-trial decision log: JSON lines, one record per line, header first.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::control::{Initiator, LoaSwitch, SwitchAction, Variant};
use crate::error::{Error, Result};
use crate::operator::{score_secondary, unattended_handovers, DistractionSchedule, SecondaryScore};
use crate::world::{Cell, LoaMode, NoiseSchedule};

pub const LOG_FORMAT: &str = "varauto-decision-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub variant: Variant,
    pub seed: u64,
    pub dt: f64,
    pub initial_loa: LoaMode,
    pub waypoints: Vec<Cell>,
    pub waypoint_radius: f64,
    pub noise: Option<NoiseSchedule>,
    pub distraction: Option<DistractionSchedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSource {
    Operator,
    Ai,
    Reached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    /// A controller evaluation in which some rule fired.
    Decision {
        tick: u64,
        t: f64,
        loa: LoaMode,
        mean_error: f64,
        error_high: f64,
        availability: f64,
        speed_low: f64,
        attending: bool,
        rule: Option<u32>,
        activation: f64,
        action: SwitchAction,
        suppressed: bool,
    },
    Switch {
        tick: u64,
        t: f64,
        from: LoaMode,
        to: LoaMode,
        initiator: Initiator,
        attending: bool,
    },
    Goal {
        tick: u64,
        t: f64,
        goal: Option<Cell>,
        source: GoalSource,
    },
    Waypoint {
        tick: u64,
        t: f64,
        index: usize,
        cell: Cell,
        /// Any-angle expert length from where the leg started.
        expert_length: f64,
        /// Distance driven over the leg.
        odometry: f64,
    },
    Collision {
        tick: u64,
        t: f64,
    },
    End {
        ticks: u64,
        t: f64,
        completed: bool,
        reason: Option<String>,
        ticks_teleop: u64,
        ticks_autonomy: u64,
        odometry: f64,
    },
}

pub fn write_log<W: Write>(records: &[LogRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn log_to_string(records: &[LogRecord]) -> String {
    let mut buf = Vec::new();
    write_log(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line)
            .map_err(|e| Error::DecisionLog(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegRecord {
    pub index: usize,
    pub cell: Cell,
    pub expert_length: f64,
    pub odometry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub completed: bool,
    pub reason: Option<String>,
    pub completion_time: f64,
    pub ticks: u64,
    pub loa_switches_total: u32,
    pub loa_switches_ai: u32,
    pub loa_switches_human: u32,
    pub time_in_teleop: f64,
    pub time_in_autonomy: f64,
    pub ticks_teleop: u64,
    pub ticks_autonomy: u64,
    pub collisions: u32,
    pub secondary: SecondaryScore,
    /// AI autonomy-to-teleoperation switches issued while the operator was
    /// estimated not to be attending.
    pub unattended_handovers: u32,
    pub odometry: f64,
    pub legs: Vec<LegRecord>,
}

/// Recomputes trial metrics from a decision log. The engine builds its own
/// metrics through this function, so replays agree by construction.
pub fn derive_metrics(records: &[LogRecord]) -> Result<RunMetrics> {
    let Some(LogRecord::Header(h)) = records.first() else {
        return Err(Error::DecisionLog("log must start with a header".into()));
    };
    if h.format != LOG_FORMAT || h.version != LOG_VERSION {
        return Err(Error::DecisionLog(format!(
            "unsupported log {} v{}",
            h.format, h.version
        )));
    }
    let mut switches: Vec<(u64, LoaSwitch, bool)> = Vec::new();
    let mut collisions = 0;
    let mut legs = Vec::new();
    let mut end = None;
    for r in &records[1..] {
        match r {
            LogRecord::Header(_) => return Err(Error::DecisionLog("duplicate header".into())),
            LogRecord::Switch {
                tick,
                t,
                from,
                to,
                initiator,
                attending,
            } => switches.push((
                *tick,
                LoaSwitch {
                    t: *t,
                    from: *from,
                    to: *to,
                    initiator: *initiator,
                },
                *attending,
            )),
            LogRecord::Collision { .. } => collisions += 1,
            LogRecord::Waypoint {
                index,
                cell,
                expert_length,
                odometry,
                ..
            } => legs.push(LegRecord {
                index: *index,
                cell: *cell,
                expert_length: *expert_length,
                odometry: *odometry,
            }),
            LogRecord::End { .. } => end = Some(r),
            LogRecord::Decision { .. } | LogRecord::Goal { .. } => {}
        }
    }
    let Some(LogRecord::End {
        ticks,
        completed,
        reason,
        ticks_teleop,
        ticks_autonomy,
        odometry,
        ..
    }) = end
    else {
        return Err(Error::DecisionLog("log has no end record".into()));
    };

    // The LOA in force for a tick is the one after every switch logged at that tick.
    let mut loa = h.initial_loa;
    let (mut tele, mut auto) = (0u64, 0u64);
    let mut k = 0u64;
    for (tick, sw, _) in &switches {
        let span = tick.saturating_sub(k).min(ticks.saturating_sub(k));
        match loa {
            LoaMode::Teleoperation => tele += span,
            LoaMode::Autonomy => auto += span,
        }
        k = k.max((*tick).min(*ticks));
        loa = sw.to;
    }
    match loa {
        LoaMode::Teleoperation => tele += ticks - k,
        LoaMode::Autonomy => auto += ticks - k,
    }
    if (tele, auto) != (*ticks_teleop, *ticks_autonomy) {
        return Err(Error::DecisionLog(format!(
            "mode tick counts ({tele}, {auto}) disagree with end record ({ticks_teleop}, {ticks_autonomy})"
        )));
    }

    let plain: Vec<LoaSwitch> = switches.iter().map(|s| s.1).collect();
    let with_attention: Vec<(LoaSwitch, bool)> = switches.iter().map(|s| (s.1, s.2)).collect();
    let ai = plain.iter().filter(|s| s.initiator == Initiator::Ai).count() as u32;
    let secondary = h
        .distraction
        .as_ref()
        .map(|d| score_secondary(d, &plain))
        .unwrap_or_default();
    Ok(RunMetrics {
        completed: *completed,
        reason: reason.clone(),
        completion_time: *ticks as f64 * h.dt,
        ticks: *ticks,
        loa_switches_total: plain.len() as u32,
        loa_switches_ai: ai,
        loa_switches_human: plain.len() as u32 - ai,
        time_in_teleop: tele as f64 * h.dt,
        time_in_autonomy: auto as f64 * h.dt,
        ticks_teleop: tele,
        ticks_autonomy: auto,
        collisions,
        secondary,
        unattended_handovers: unattended_handovers(&with_attention) as u32,
        odometry: *odometry,
        legs,
    })
}
