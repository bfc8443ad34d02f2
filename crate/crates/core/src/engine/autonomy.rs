use crate::navigation::{follow, plan, replan_if_blocked, FollowerConfig, Path, Replan};
use crate::world::{Cell, KinematicLimits, Occupancy, OccupancyGrid, RobotState, VelocityCommand};

/// Seconds between planning attempts while no path to the goal exists.
const RETRY_PERIOD: f64 = 0.5;

/// Autonomy-LOA navigation on the belief map.
#[derive(Debug, Clone, Default)]
pub struct AutonomyDriver {
    goal: Option<Cell>,
    path: Option<Path>,
    next_attempt: f64,
    pub replans: u32,
}

pub struct DriveOutput {
    pub command: VelocityCommand,
    pub goal_reached: bool,
}

impl AutonomyDriver {
    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    pub fn clear(&mut self) {
        self.goal = None;
        self.path = None;
        self.next_attempt = 0.0;
    }

    fn planning_grid(belief: &OccupancyGrid, inflation: i32, here: Option<Cell>, goal: Cell) -> OccupancyGrid {
        let mut g = belief.inflated(inflation, &[]);
        for c in here.into_iter().chain([goal]) {
            if g.contains(c) {
                g.set(c, Occupancy::Free);
            }
        }
        g
    }

    pub fn drive(
        &mut self,
        belief: &OccupancyGrid,
        inflation: i32,
        robot: &RobotState,
        t: f64,
        limits: &KinematicLimits,
        config: &FollowerConfig,
    ) -> DriveOutput {
        let idle = DriveOutput {
            command: VelocityCommand::ZERO,
            goal_reached: false,
        };
        let Some(goal) = robot.current_goal else {
            self.clear();
            return idle;
        };
        if self.goal != Some(goal) {
            self.clear();
            self.goal = Some(goal);
        }
        let here = belief.cell_at(robot.x, robot.y);
        let grid = Self::planning_grid(belief, inflation, here, goal);
        match self.path.take() {
            Some(p) => match replan_if_blocked(&grid, &p, robot, config) {
                Ok(Replan::Unchanged) => self.path = Some(p),
                Ok(Replan::Replanned(np)) => {
                    self.replans += 1;
                    self.path = Some(np);
                }
                Err(_) => self.next_attempt = t + RETRY_PERIOD,
            },
            None if t >= self.next_attempt - 1e-9 => match here {
                Some(start) => match plan(&grid, start, goal) {
                    Ok(p) => self.path = Some(p),
                    Err(_) => self.next_attempt = t + RETRY_PERIOD,
                },
                None => return idle,
            },
            None => {}
        }
        match &self.path {
            Some(p) => {
                let out = follow(p, robot, limits, config);
                DriveOutput {
                    command: out.command,
                    goal_reached: out.goal_reached,
                }
            }
            None => idle,
        }
    }
}
