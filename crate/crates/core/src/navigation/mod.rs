//! Planning and path following for the Autonomy LOA, and the idealized-map
//! expert that supplies the expected speed.

mod expert;
mod follower;
mod planner;

pub use crate::world::VelocityCommand;
pub use expert::{expert_expected_speed, line_of_sight, smoothed_length, Expert, ExpertProfile};
pub use follower::{follow, replan_if_blocked, FollowOutput, FollowerConfig, Replan};

/// Point `distance` meters along `path` ahead of the closest point to (x, y).
pub fn pursuit_target(path: &Path, x: f64, y: f64, distance: f64) -> (f64, f64) {
    follower::pursuit_point(path, x, y, distance)
}
pub use planner::{can_move, plan, CostField, OctileCost, Path, NEIGHBORS};
