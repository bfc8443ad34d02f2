use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use super::{wrap_angle, RobotState};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    /// m/s
    pub linear: f64,
    /// rad/s
    pub angular: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand {
        linear: 0.0,
        angular: 0.0,
    };

    pub fn new(linear: f64, angular: f64) -> Self {
        VelocityCommand { linear, angular }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        KinematicLimits {
            v_max: 1.0,
            omega_max: std::f64::consts::PI,
        }
    }
}

impl KinematicLimits {
    /// Returns the clamped command and whether clamping changed it.
    pub fn clamp(&self, cmd: VelocityCommand) -> (VelocityCommand, bool) {
        let linear = if cmd.linear.is_finite() {
            cmd.linear.clamp(-self.v_max, self.v_max)
        } else {
            0.0
        };
        let angular = if cmd.angular.is_finite() {
            cmd.angular.clamp(-self.omega_max, self.omega_max)
        } else {
            0.0
        };
        let out = VelocityCommand { linear, angular };
        (out, out != cmd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub collided: bool,
    /// Distance actually travelled this tick.
    pub travelled: f64,
}

/// Differential-drive integration over one tick against the true grid.
///
/// Heading is updated first and the translation uses the new heading. A move
/// whose target point lies in an occupied (or out-of-grid) cell is refused:
/// position is held, linear speed zeroed and `collided` set.
pub fn step(
    grid: &OccupancyGrid,
    state: &RobotState,
    cmd: VelocityCommand,
    dt: f64,
    limits: &KinematicLimits,
) -> StepOutcome {
    assert!(dt > 0.0, "dt must be positive");
    let (cmd, _) = limits.clamp(cmd);
    let mut next = state.clone();
    next.heading = wrap_angle(state.heading + cmd.angular * dt);
    next.angular_speed = cmd.angular;
    next.linear_speed = cmd.linear;

    if cmd.linear == 0.0 {
        return StepOutcome {
            state: next,
            collided: false,
            travelled: 0.0,
        };
    }

    let nx = state.x + cmd.linear * next.heading.cos() * dt;
    let ny = state.y + cmd.linear * next.heading.sin() * dt;
    match grid.cell_at(nx, ny) {
        Some(c) if grid.is_free(c) => {
            next.x = nx;
            next.y = ny;
            StepOutcome {
                travelled: (nx - state.x).hypot(ny - state.y),
                state: next,
                collided: false,
            }
        }
        _ => {
            next.linear_speed = 0.0;
            StepOutcome {
                state: next,
                collided: true,
                travelled: 0.0,
            }
        }
    }
}
