//! Arena, robot kinematics, laser sensing and the noise-corrupted belief map.

mod belief;
mod grid;
mod kinematics;
mod map_text;
mod sensor;

pub use belief::{Belief, BeliefConfig, CellChange};
pub use grid::{Cell, Occupancy, OccupancyGrid};
pub use kinematics::{step, KinematicLimits, StepOutcome, VelocityCommand};
pub use map_text::MapFile;
pub use sensor::{cast_ray, sense, Beam, LaserConfig, LaserScan, NoiseSchedule};

/// Cells crossed by a ray of length `limit` from (x, y).
pub(crate) fn sensor_walk(
    grid: &OccupancyGrid,
    x: f64,
    y: f64,
    angle: f64,
    limit: f64,
) -> impl Iterator<Item = Cell> + '_ {
    sensor::RayWalk::new(grid, x, y, angle, limit).map(|(c, _)| c)
}

use serde::{Deserialize, Serialize};

/// Fixed simulation tick.
pub const DEFAULT_DT: f64 = 0.1;

/// The two levels of autonomy of the human-robot system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoaMode {
    Teleoperation,
    Autonomy,
}

impl LoaMode {
    pub fn other(self) -> LoaMode {
        match self {
            LoaMode::Teleoperation => LoaMode::Autonomy,
            LoaMode::Autonomy => LoaMode::Teleoperation,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoaMode::Teleoperation => "teleoperation",
            LoaMode::Autonomy => "autonomy",
        }
    }
}

impl std::fmt::Display for LoaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub active_loa: LoaMode,
    pub current_goal: Option<Cell>,
}

impl RobotState {
    pub fn at(x: f64, y: f64, heading: f64, loa: LoaMode) -> Self {
        RobotState {
            x,
            y,
            heading: wrap_angle(heading),
            linear_speed: 0.0,
            angular_speed: 0.0,
            active_loa: loa,
            current_goal: None,
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
