use serde::{Deserialize, Serialize};

use super::planner::{plan, Path};
use crate::error::Result;
use crate::world::{wrap_angle, KinematicLimits, OccupancyGrid, RobotState, VelocityCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerConfig {
    /// Distance along the path to the pursuit point, meters.
    pub lookahead: f64,
    /// Linear speed ramps down linearly inside this radius of the goal.
    pub decel_radius: f64,
    /// Within this distance the goal counts as reached.
    pub goal_tolerance: f64,
    /// Path distance ahead of the robot checked for new obstacles.
    pub blocked_horizon: f64,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        FollowerConfig {
            lookahead: 0.75,
            decel_radius: 1.5,
            goal_tolerance: 0.1,
            blocked_horizon: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowOutput {
    pub command: VelocityCommand,
    pub goal_reached: bool,
}

/// Closest point on the polyline: (segment index, parameter in [0,1]).
fn closest_on_path(path: &Path, x: f64, y: f64) -> (usize, f64) {
    let n = path.waypoints.len();
    if n == 1 {
        return (0, 0.0);
    }
    let mut best = (0, 0.0, f64::INFINITY);
    for i in 0..n - 1 {
        let (ax, ay) = path.center(i);
        let (bx, by) = path.center(i + 1);
        let (vx, vy) = (bx - ax, by - ay);
        let len2 = vx * vx + vy * vy;
        let s = (((x - ax) * vx + (y - ay) * vy) / len2).clamp(0.0, 1.0);
        let d = (ax + s * vx - x).hypot(ay + s * vy - y);
        if d < best.2 {
            best = (i, s, d);
        }
    }
    (best.0, best.1)
}

/// Point `distance` meters along the path from the closest point to (x, y).
pub(crate) fn pursuit_point(path: &Path, x: f64, y: f64, distance: f64) -> (f64, f64) {
    let n = path.waypoints.len();
    if n == 1 {
        return path.center(0);
    }
    let (mut seg, s) = closest_on_path(path, x, y);
    let (ax, ay) = path.center(seg);
    let (bx, by) = path.center(seg + 1);
    let mut px = ax + s * (bx - ax);
    let mut py = ay + s * (by - ay);
    let mut left = distance;
    loop {
        let (bx, by) = path.center(seg + 1);
        let d = (bx - px).hypot(by - py);
        if d >= left {
            let k = left / d;
            return (px + k * (bx - px), py + k * (by - py));
        }
        left -= d;
        px = bx;
        py = by;
        seg += 1;
        if seg + 1 >= n {
            return (px, py);
        }
    }
}

/// Pure-pursuit path tracking.
///
/// Linear speed is `v_max * max(0, cos(err)) * min(1, d_goal / decel_radius)`
/// where `err` is the bearing of the pursuit point relative to the heading.
/// Angular speed is the pure-pursuit curvature at `v_max`, or a full-rate turn
/// in place when the pursuit point is behind the robot.
pub fn follow(
    path: &Path,
    state: &RobotState,
    limits: &KinematicLimits,
    config: &FollowerConfig,
) -> FollowOutput {
    let (gx, gy) = path.center(path.waypoints.len() - 1);
    let d_goal = state.distance_to(gx, gy);
    if d_goal <= config.goal_tolerance {
        return FollowOutput {
            command: VelocityCommand::ZERO,
            goal_reached: true,
        };
    }
    let (lx, ly) = pursuit_point(path, state.x, state.y, config.lookahead);
    let err = if (lx - state.x).hypot(ly - state.y) < 1e-9 {
        wrap_angle((gy - state.y).atan2(gx - state.x) - state.heading)
    } else {
        wrap_angle((ly - state.y).atan2(lx - state.x) - state.heading)
    };
    let ramp = (d_goal / config.decel_radius).min(1.0);
    let linear = limits.v_max * err.cos().max(0.0) * ramp;
    let angular = if err.abs() <= std::f64::consts::FRAC_PI_2 {
        2.0 * limits.v_max * err.sin() / config.lookahead
    } else {
        limits.omega_max * err.signum()
    };
    let (command, _) = limits.clamp(VelocityCommand { linear, angular });
    FollowOutput {
        command,
        goal_reached: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Replan {
    Unchanged,
    Replanned(Path),
}

/// Re-plans on `grid` when any path cell within `blocked_horizon` meters ahead
/// of the robot has become occupied. The robot's own cell is not checked.
pub fn replan_if_blocked(
    grid: &OccupancyGrid,
    path: &Path,
    state: &RobotState,
    config: &FollowerConfig,
) -> Result<Replan> {
    let here = grid.cell_at(state.x, state.y);
    let (seg, _) = closest_on_path(path, state.x, state.y);
    let mut ahead = 0.0;
    let mut blocked = false;
    for i in seg..path.waypoints.len() {
        if i > seg {
            let (ax, ay) = path.center(i - 1);
            let (bx, by) = path.center(i);
            ahead += (bx - ax).hypot(by - ay);
            if ahead > config.blocked_horizon {
                break;
            }
        }
        let c = path.waypoints[i];
        if Some(c) != here && grid.is_occupied(c) {
            blocked = true;
            break;
        }
    }
    if !blocked {
        return Ok(Replan::Unchanged);
    }
    let start = here.unwrap_or(path.start());
    plan(grid, start, path.goal()).map(Replan::Replanned)
}
