use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::follower::{follow, pursuit_point, FollowerConfig};
use super::planner::{plan, CostField, Path};
use crate::error::{Error, Result};
use crate::world::{Cell, KinematicLimits, Occupancy, OccupancyGrid, RobotState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertProfile {
    /// Linear speed the expert would command now, m/s.
    pub expected_speed: f64,
    /// Any-angle length of the expert path from the robot's position, meters.
    pub remaining_expert_length: f64,
}

impl ExpertProfile {
    pub const IDLE: ExpertProfile = ExpertProfile {
        expected_speed: 0.0,
        remaining_expert_length: 0.0,
    };
}

/// True when the straight segment crosses only free cells.
pub fn line_of_sight(grid: &OccupancyGrid, from: (f64, f64), to: (f64, f64)) -> bool {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return grid.cell_at(from.0, from.1).is_some_and(|c| grid.is_free(c));
    }
    crate::world::sensor_walk(grid, from.0, from.1, dy.atan2(dx), len)
        .all(|c| grid.is_free(c))
}

/// Length of the path after greedy string-pulling from `from` through the
/// path's cell centers, using line of sight on `grid`.
pub fn smoothed_length(grid: &OccupancyGrid, from: (f64, f64), path: &Path) -> f64 {
    let pts: Vec<(f64, f64)> = std::iter::once(from)
        .chain((1..path.waypoints.len()).map(|i| path.center(i)))
        .collect();
    if pts.len() == 1 {
        let (gx, gy) = path.center(0);
        return (gx - from.0).hypot(gy - from.1);
    }
    let mut total = 0.0;
    let mut anchor = 0;
    while anchor < pts.len() - 1 {
        let mut reach = anchor + 1;
        while reach + 1 < pts.len() && line_of_sight(grid, pts[anchor], pts[reach + 1]) {
            reach += 1;
        }
        total += (pts[reach].0 - pts[anchor].0).hypot(pts[reach].1 - pts[anchor].1);
        anchor = reach;
    }
    total
}

/// Evaluates the expert on a path planned from the robot's pose. The expert
/// is taken to be lined up with its own pursuit point, so the expected speed
/// only drops for the goal deceleration ramp and is zero exactly at the goal.
fn profile_on_path(
    los_grid: &OccupancyGrid,
    path: &Path,
    state: &RobotState,
    limits: &KinematicLimits,
    config: &FollowerConfig,
) -> ExpertProfile {
    let (px, py) = pursuit_point(path, state.x, state.y, config.lookahead);
    let mut aligned = state.clone();
    if (px - state.x).hypot(py - state.y) > 1e-9 {
        aligned.heading = (py - state.y).atan2(px - state.x);
    } else {
        let (gx, gy) = path.center(path.waypoints.len() - 1);
        aligned.heading = (gy - state.y).atan2(gx - state.x);
    }
    let out = follow(path, &aligned, limits, config);
    ExpertProfile {
        expected_speed: if out.goal_reached {
            0.0
        } else {
            out.command.linear.clamp(0.0, limits.v_max)
        },
        remaining_expert_length: smoothed_length(los_grid, (state.x, state.y), path),
    }
}

/// Stateless expert: plans on the idealized grid from the robot's cell and
/// follows the result.
pub fn expert_expected_speed(
    ideal: &OccupancyGrid,
    state: &RobotState,
    goal: Cell,
    limits: &KinematicLimits,
    config: &FollowerConfig,
) -> Result<ExpertProfile> {
    let start = ideal
        .cell_at(state.x, state.y)
        .ok_or_else(|| Error::InvalidMap("robot outside arena".into()))?;
    let path = plan(ideal, start, goal)?;
    Ok(profile_on_path(ideal, &path, state, limits, config))
}

/// The concurrently running expert navigator used by the tick loop. It plans on
/// the noise-free true map (inflated for clearance) and caches one cost-to-go
/// field per goal, so re-planning from the actual pose every tick is a descent.
#[derive(Debug, Clone)]
pub struct Expert {
    truth: OccupancyGrid,
    planning: OccupancyGrid,
    fields: HashMap<Cell, CostField>,
    limits: KinematicLimits,
    config: FollowerConfig,
}

impl Expert {
    pub fn new(
        truth: &OccupancyGrid,
        inflation: i32,
        limits: KinematicLimits,
        config: FollowerConfig,
    ) -> Self {
        Expert {
            truth: truth.clone(),
            planning: truth.inflated(inflation, &[]),
            fields: HashMap::new(),
            limits,
            config,
        }
    }

    pub fn planning_grid(&self) -> &OccupancyGrid {
        &self.planning
    }

    fn field(&mut self, goal: Cell) -> Result<&CostField> {
        if !self.fields.contains_key(&goal) {
            if !self.truth.is_free(goal) {
                return Err(Error::CellNotFree(goal));
            }
            if self.planning.is_occupied(goal) {
                self.planning.set(goal, Occupancy::Free);
            }
            let f = CostField::build(&self.planning, goal)?;
            self.fields.insert(goal, f);
        }
        Ok(&self.fields[&goal])
    }

    /// Optimal path from the robot's cell to `goal` on the planning grid.
    pub fn path(&mut self, state: &RobotState, goal: Cell) -> Result<Path> {
        let start = self
            .truth
            .cell_at(state.x, state.y)
            .ok_or_else(|| Error::InvalidMap("robot outside arena".into()))?;
        self.field(goal)?;
        self.fields[&goal]
            .path_from(&self.planning, start)
            .ok_or(Error::NoPath { start, goal })
    }

    pub fn profile(&mut self, state: &RobotState, goal: Option<Cell>) -> Result<ExpertProfile> {
        let Some(goal) = goal else {
            return Ok(ExpertProfile::IDLE);
        };
        let path = self.path(state, goal)?;
        Ok(profile_on_path(
            &self.truth,
            &path,
            state,
            &self.limits,
            &self.config,
        ))
    }
}
