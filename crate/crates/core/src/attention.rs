//! Head-yaw stream to cognitive-availability estimate.
//!
//! Yaw is in degrees, 0 facing the robot console, positive toward the
//! secondary-task screen. Samples pass through an exponential moving average
//! and the filtered value is mapped onto an attending degree in `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Yaw substituted for a missing face once the dropout grace has elapsed.
pub const DROPOUT_YAW: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPoseSample {
    pub timestamp: f64,
    pub yaw: f64,
}

impl HeadPoseSample {
    pub fn new(timestamp: f64, yaw: f64) -> Self {
        HeadPoseSample {
            timestamp,
            yaw: yaw.clamp(-90.0, 90.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityEstimate {
    pub filtered_yaw: f64,
    pub attending_degree: f64,
    pub attending: bool,
}

impl AvailabilityEstimate {
    pub const FULL: AvailabilityEstimate = AvailabilityEstimate {
        filtered_yaw: 0.0,
        attending_degree: 1.0,
        attending: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawCalibration {
    /// |yaw| at or below which the operator fully attends.
    pub attend_band: f64,
    /// |yaw| at or above which the operator does not attend at all.
    pub away_band: f64,
}

impl Default for YawCalibration {
    fn default() -> Self {
        YawCalibration {
            attend_band: 15.0,
            away_band: 30.0,
        }
    }
}

impl YawCalibration {
    pub fn new(attend_band: f64, away_band: f64) -> Result<Self> {
        if 0.0 < attend_band && attend_band < away_band && away_band <= 90.0 {
            Ok(YawCalibration {
                attend_band,
                away_band,
            })
        } else {
            Err(Error::Calibration(format!(
                "bands must satisfy 0 < attend ({attend_band}) < away ({away_band}) <= 90"
            )))
        }
    }
}

/// One EMA step: `alpha * yaw + (1 - alpha) * prev`.
pub fn ema_update(prev_filtered: f64, sample: &HeadPoseSample, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    alpha * sample.yaw + (1.0 - alpha) * prev_filtered
}

pub fn classify(filtered_yaw: f64, cal: &YawCalibration) -> AvailabilityEstimate {
    let a = filtered_yaw.abs();
    let degree = if a <= cal.attend_band {
        1.0
    } else if a >= cal.away_band {
        0.0
    } else {
        (cal.away_band - a) / (cal.away_band - cal.attend_band)
    };
    AvailabilityEstimate {
        filtered_yaw,
        attending_degree: degree,
        attending: degree >= 0.5,
    }
}

/// Smallest attend band a calibration may produce.
pub const MIN_ATTEND_BAND: f64 = 5.0;

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Derives bands from baseline recordings of an operator looking at the
/// console and looking away.
///
/// `attend_band = mean|attending| + 2 sd`, raised to at least
/// [`MIN_ATTEND_BAND`]; `away_band` is the midpoint between `attend_band` and
/// `mean|away|`.
pub fn calibrate(baseline_attending: &[f64], baseline_away: &[f64]) -> Result<YawCalibration> {
    if baseline_attending.is_empty() || baseline_away.is_empty() {
        return Err(Error::Calibration("baseline sets must be non-empty".into()));
    }
    let att: Vec<f64> = baseline_attending.iter().map(|y| y.abs()).collect();
    let away: Vec<f64> = baseline_away.iter().map(|y| y.abs()).collect();
    let (m_att, sd_att) = mean_sd(&att);
    let (m_away, _) = mean_sd(&away);
    if m_away <= m_att {
        return Err(Error::Calibration(format!(
            "mean |away| ({m_away:.3}) must exceed mean |attending| ({m_att:.3})"
        )));
    }
    let attend = (m_att + 2.0 * sd_att).max(MIN_ATTEND_BAND);
    let away_band = ((attend + m_away) / 2.0).min(90.0);
    if attend >= away_band {
        return Err(Error::Calibration(format!(
            "distributions overlap: attend band {attend:.3} >= away band {away_band:.3}"
        )));
    }
    YawCalibration::new(attend, away_band)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionConfig {
    pub alpha: f64,
    pub calibration: YawCalibration,
    /// Seconds without a sample before the operator is assumed to look away.
    pub dropout_grace: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            alpha: 0.2,
            calibration: YawCalibration::default(),
            dropout_grace: 0.5,
        }
    }
}

/// Filter state owned by the tick loop. Samples that arrive between ticks are
/// queued by the caller and fed in order.
#[derive(Debug, Clone)]
pub struct AvailabilityTracker {
    config: AttentionConfig,
    filtered: Option<f64>,
    last_sample: Option<f64>,
}

impl AvailabilityTracker {
    pub fn new(config: AttentionConfig) -> Self {
        AvailabilityTracker {
            config,
            filtered: None,
            last_sample: None,
        }
    }

    pub fn config(&self) -> &AttentionConfig {
        &self.config
    }

    pub fn push(&mut self, sample: HeadPoseSample) {
        self.filtered = Some(match self.filtered {
            None => sample.yaw,
            Some(prev) => ema_update(prev, &sample, self.config.alpha),
        });
        self.last_sample = Some(sample.timestamp);
    }

    /// Estimate at tick time `t`, applying the dropout rule when samples
    /// have stopped for longer than the grace period. Call once per tick.
    pub fn estimate(&mut self, t: f64) -> AvailabilityEstimate {
        let since = t - self.last_sample.unwrap_or(0.0);
        if since > self.config.dropout_grace + 1e-9 {
            self.push(HeadPoseSample::new(t, DROPOUT_YAW));
            // A synthetic sample must not reset the dropout clock.
            self.last_sample = Some(t - since);
        }
        classify(self.filtered.unwrap_or(0.0), &self.config.calibration)
    }

    pub fn filtered_yaw(&self) -> Option<f64> {
        self.filtered
    }
}

/// Parses a replayable yaw trace: one `timestamp_s yaw_deg` pair per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_yaw_trace(text: &str) -> Result<Vec<HeadPoseSample>> {
    let mut out: Vec<HeadPoseSample> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| Error::YawTrace {
            line: i + 1,
            reason: reason.to_string(),
        };
        let mut parts = line.split_whitespace();
        let (Some(t), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected `timestamp_s yaw_deg`"));
        };
        let t: f64 = t.parse().map_err(|_| bad("bad timestamp"))?;
        let y: f64 = y.parse().map_err(|_| bad("bad yaw"))?;
        if !(-90.0..=90.0).contains(&y) {
            return Err(bad("yaw outside [-90, 90]"));
        }
        if out.last().is_some_and(|p| p.timestamp >= t) {
            return Err(bad("timestamps must be strictly increasing"));
        }
        out.push(HeadPoseSample::new(t, y));
    }
    Ok(out)
}

pub fn load_yaw_trace(path: &Path) -> Result<Vec<HeadPoseSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_yaw_trace(&text)
}

pub fn format_yaw_trace(samples: &[HeadPoseSample]) -> String {
    let mut s = String::new();
    for p in samples {
        let _ = writeln!(s, "{} {}", p.timestamp, p.yaw);
    }
    s
}
