//! The tick loop shared by headless trials and live bridge sessions.
//!
//! Per tick: queued commands are applied at the boundary, then availability is
//! estimated, the laser is integrated into the belief, the expert is
//! evaluated, the controller decides, the active LOA produces a velocity
//! command and the kinematics advance the true robot.

mod autonomy;
mod log;

pub use self::autonomy::{AutonomyDriver, DriveOutput};
pub use self::log::{
    derive_metrics, log_to_string, read_log, write_log, GoalSource, LegRecord, LogHeader,
    LogRecord, RunMetrics, LOG_FORMAT, LOG_VERSION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{AttentionConfig, AvailabilityEstimate, AvailabilityTracker, HeadPoseSample};
use crate::control::{Controller, ControllerConfig, ControllerInputs, LoaSwitch, RuleBase, Variant};
use crate::error::{Error, Result};
use crate::navigation::{Expert, ExpertProfile, FollowerConfig};
use crate::operator::{DistractionSchedule, Observation};
use crate::world::{
    sense, step, Belief, BeliefConfig, Cell, CellChange, KinematicLimits, LaserConfig, LoaMode,
    NoiseSchedule, OccupancyGrid, RobotState, VelocityCommand, DEFAULT_DT,
};

/// RNG stream ids derived from a trial seed.
pub const STREAM_SENSOR: u64 = 1;
pub const STREAM_OPERATOR: u64 = 2;
pub const STREAM_YAW: u64 = 3;
pub const STREAM_PLACEMENT: u64 = 4;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub dt: f64,
    pub limits: KinematicLimits,
    pub laser: LaserConfig,
    pub belief: BeliefConfig,
    pub follower: FollowerConfig,
    /// Obstacle inflation (cells) applied to every planning map.
    pub inflation: i32,
    pub controller: ControllerConfig,
    pub attention: AttentionConfig,
    pub waypoint_radius: f64,
    pub timeout: f64,
    /// A teleoperation command keeps driving for this long after arrival.
    pub teleop_hold: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: DEFAULT_DT,
            limits: KinematicLimits::default(),
            laser: LaserConfig::default(),
            belief: BeliefConfig::default(),
            follower: FollowerConfig::default(),
            inflation: 1,
            controller: ControllerConfig::default(),
            attention: AttentionConfig::default(),
            waypoint_radius: 0.5,
            timeout: 600.0,
            teleop_hold: 0.5,
        }
    }
}

/// Everything needed to start a trial or session.
#[derive(Debug, Clone)]
pub struct EngineSetup {
    pub scenario: String,
    pub truth: OccupancyGrid,
    pub start: Cell,
    pub start_heading: f64,
    pub waypoints: Vec<Cell>,
    pub initial_loa: LoaMode,
    pub variant: Variant,
    /// Overrides the variant's built-in rule base.
    pub rules: Option<RuleBase>,
    pub noise: Option<NoiseSchedule>,
    /// Recorded in the log so the secondary score can be derived from it.
    pub distraction: Option<DistractionSchedule>,
    pub seed: u64,
    pub config: EngineConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Running,
    Completed,
    TimedOut,
}

/// Operator input, applied at the next tick boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    Teleop { v: f64, w: f64 },
    SetGoal { cell: Cell },
    RequestLoa { mode: LoaMode },
    Yaw { deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Applied {
    /// Accepted but without effect in the current state.
    pub ignored: bool,
    /// Velocities were clamped to the kinematic limits.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySnapshot {
    pub t: f64,
    pub tick: u64,
    pub robot: RobotState,
    pub active_loa: LoaMode,
    pub current_goal: Option<Cell>,
    pub planned_path: Vec<Cell>,
    pub belief_delta: Vec<CellChange>,
    pub availability: AvailabilityEstimate,
    pub mean_error: f64,
    pub last_switch: Option<LoaSwitch>,
    pub waypoints_remaining: Vec<Cell>,
    pub status: TrialStatus,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    truth: OccupancyGrid,
    belief: Belief,
    robot: RobotState,
    controller: Controller,
    tracker: AvailabilityTracker,
    availability: AvailabilityEstimate,
    expert: Expert,
    expert_goal: Option<Cell>,
    driver: AutonomyDriver,
    noise: Option<NoiseSchedule>,
    sensor_rng: ChaCha8Rng,
    waypoints: Vec<Cell>,
    next_waypoint: usize,
    tick: u64,
    status: TrialStatus,
    teleop: Option<(VelocityCommand, u64)>,
    was_colliding: bool,
    odometry: f64,
    leg_start_odometry: f64,
    leg_expert_length: f64,
    ticks_teleop: u64,
    ticks_autonomy: u64,
    last_switch: Option<LoaSwitch>,
    track_changes: bool,
    changes: Vec<CellChange>,
    log: Vec<LogRecord>,
}

impl Engine {
    pub fn new(setup: EngineSetup) -> Result<Engine> {
        let EngineSetup {
            scenario,
            truth,
            start,
            start_heading,
            waypoints,
            initial_loa,
            variant,
            rules,
            noise,
            distraction,
            seed,
            config,
        } = setup;
        if waypoints.is_empty() {
            return Err(Error::Scenario("no waypoints".into()));
        }
        if !truth.is_free(start) {
            return Err(Error::Scenario(format!("start {start} is not free")));
        }
        let mut expert = Expert::new(&truth, config.inflation, config.limits, config.follower);
        let mut from = start;
        for (i, &wp) in waypoints.iter().enumerate() {
            let (x, y) = truth.center(from);
            let probe = RobotState::at(x, y, 0.0, LoaMode::Autonomy);
            expert.path(&probe, wp).map_err(|e| {
                Error::Scenario(format!("waypoint {} at {wp} is unreachable: {e}", i + 1))
            })?;
            from = wp;
        }

        let (x, y) = truth.center(start);
        let controller = match rules {
            Some(r) => Controller::with_rules(variant, Some(r), config.controller, initial_loa),
            None => Controller::new(variant, config.controller, initial_loa),
        };
        let robot = RobotState::at(x, y, start_heading, controller.active_loa());
        let header = LogHeader {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            scenario,
            variant,
            seed,
            dt: config.dt,
            initial_loa: controller.active_loa(),
            waypoints: waypoints.clone(),
            waypoint_radius: config.waypoint_radius,
            noise,
            distraction,
        };
        let mut engine = Engine {
            belief: Belief::new(&truth, config.belief),
            robot,
            controller,
            tracker: AvailabilityTracker::new(config.attention),
            availability: AvailabilityEstimate::FULL,
            expert,
            expert_goal: None,
            driver: AutonomyDriver::default(),
            noise,
            sensor_rng: stream_rng(seed, STREAM_SENSOR),
            waypoints,
            next_waypoint: 0,
            tick: 0,
            status: TrialStatus::Running,
            teleop: None,
            was_colliding: false,
            odometry: 0.0,
            leg_start_odometry: 0.0,
            leg_expert_length: 0.0,
            ticks_teleop: 0,
            ticks_autonomy: 0,
            last_switch: None,
            track_changes: false,
            changes: Vec::new(),
            log: vec![LogRecord::Header(header)],
            truth,
            config,
        };
        engine.leg_expert_length = engine.expert_length_to(engine.waypoints[0]);
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn t(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn status(&self) -> TrialStatus {
        self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == TrialStatus::Running
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    pub fn belief(&self) -> &OccupancyGrid {
        self.belief.grid()
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn availability(&self) -> AvailabilityEstimate {
        self.availability
    }

    pub fn next_waypoint(&self) -> Option<Cell> {
        self.waypoints.get(self.next_waypoint).copied()
    }

    pub fn waypoints_remaining(&self) -> &[Cell] {
        &self.waypoints[self.next_waypoint.min(self.waypoints.len())..]
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    /// Keep belief changes for [`Engine::snapshot`]; off by default so
    /// headless trials do not accumulate them.
    pub fn track_belief_changes(&mut self, on: bool) {
        self.track_changes = on;
        self.changes.clear();
    }

    pub fn observation(&self) -> Observation {
        Observation {
            t: self.t(),
            robot: self.robot.clone(),
            next_waypoint: self.next_waypoint(),
        }
    }

    /// Immutable view for telemetry. Drains the belief delta.
    pub fn snapshot(&mut self) -> TelemetrySnapshot {
        TelemetrySnapshot {
            t: self.t(),
            tick: self.tick,
            robot: self.robot.clone(),
            active_loa: self.controller.active_loa(),
            current_goal: self.robot.current_goal,
            planned_path: self
                .driver
                .path()
                .map(|p| p.waypoints.clone())
                .unwrap_or_default(),
            belief_delta: std::mem::take(&mut self.changes),
            availability: self.availability,
            mean_error: self.controller.mean_error(),
            last_switch: self.last_switch,
            waypoints_remaining: self.waypoints_remaining().to_vec(),
            status: self.status,
        }
    }

    fn expert_length_to(&mut self, goal: Cell) -> f64 {
        self.expert
            .profile(&self.robot, Some(goal))
            .map(|p| p.remaining_expert_length)
            .unwrap_or(f64::INFINITY)
    }

    fn set_goal(&mut self, goal: Option<Cell>, source: GoalSource) {
        if self.robot.current_goal == goal {
            return;
        }
        self.robot.current_goal = goal;
        self.log.push(LogRecord::Goal {
            tick: self.tick,
            t: self.t(),
            goal,
            source,
        });
    }

    fn record_switch(&mut self, sw: LoaSwitch) {
        self.robot.active_loa = sw.to;
        self.teleop = None;
        self.last_switch = Some(sw);
        self.log.push(LogRecord::Switch {
            tick: self.tick,
            t: sw.t,
            from: sw.from,
            to: sw.to,
            initiator: sw.initiator,
            attending: self.availability.attending,
        });
    }

    /// Applies one operator command at the current tick boundary.
    pub fn apply(&mut self, cmd: Command) -> std::result::Result<Applied, String> {
        if !self.is_running() {
            return Err("trial has ended".into());
        }
        let t = self.t();
        match cmd {
            Command::Teleop { v, w } => {
                if !v.is_finite() || !w.is_finite() {
                    return Err("velocities must be finite".into());
                }
                let (cmd, clamped) = self.config.limits.clamp(VelocityCommand::new(v, w));
                if self.controller.active_loa() != LoaMode::Teleoperation {
                    return Ok(Applied { ignored: true, clamped });
                }
                self.teleop = Some((cmd, self.tick));
                Ok(Applied { ignored: false, clamped })
            }
            Command::SetGoal { cell } => {
                if !self.belief.grid().contains(cell) {
                    return Err(format!("goal {cell} is outside the map"));
                }
                if self.belief.grid().is_occupied(cell) {
                    return Err(format!("goal {cell} is occupied"));
                }
                let ignored = self.robot.current_goal == Some(cell);
                self.set_goal(Some(cell), GoalSource::Operator);
                Ok(Applied { ignored, clamped: false })
            }
            Command::RequestLoa { mode } => match self.controller.apply_operator_switch(mode, t) {
                Some(sw) => {
                    self.record_switch(sw);
                    Ok(Applied::default())
                }
                None => Ok(Applied { ignored: true, clamped: false }),
            },
            Command::Yaw { deg } => {
                if !deg.is_finite() {
                    return Err("yaw must be finite".into());
                }
                self.tracker.push(HeadPoseSample::new(t, deg));
                Ok(Applied { ignored: false, clamped: deg.abs() > 90.0 })
            }
        }
    }

    /// Advances the simulation by one tick. No-op once the trial has ended.
    pub fn tick(&mut self) {
        if !self.is_running() {
            return;
        }
        let t = self.t();
        let dt = self.config.dt;
        self.availability = self.tracker.estimate(t);

        let scan = sense(
            &self.truth,
            &self.robot,
            &self.config.laser,
            self.noise.as_ref(),
            t,
            &mut self.sensor_rng,
        );
        self.belief.integrate(&scan, &self.robot);
        let delta = self.belief.take_changes();
        if self.track_changes {
            self.changes.extend(delta);
        }

        // In teleoperation without a goal the operator is heading for the next
        // waypoint, so the expert measures progress toward it.
        let expert_goal = self.robot.current_goal.or(match self.controller.active_loa() {
            LoaMode::Teleoperation => self.next_waypoint(),
            LoaMode::Autonomy => None,
        });
        if expert_goal != self.expert_goal {
            self.expert_goal = expert_goal;
            self.controller.reset_window();
        }
        let profile = self
            .expert
            .profile(&self.robot, expert_goal)
            .unwrap_or(ExpertProfile::IDLE);

        let rec = self.controller.decide(
            &ControllerInputs {
                expert_speed: profile.expected_speed,
                actual_speed: self.robot.linear_speed.abs(),
                availability: self.availability,
            },
            t,
        );
        if let Some(rule) = rec.decision.firing_rule {
            self.log.push(LogRecord::Decision {
                tick: self.tick,
                t,
                loa: rec.input.active_loa,
                mean_error: rec.mean_error,
                error_high: rec.input.error_degree_high,
                availability: rec.input.availability_degree,
                speed_low: rec.input.speed_degree_low,
                attending: self.availability.attending,
                rule: Some(rule),
                activation: rec.decision.activation,
                action: rec.decision.action,
                suppressed: rec.suppressed,
            });
        }
        if let Some(sw) = rec.issued {
            self.record_switch(sw);
            if sw.to == LoaMode::Autonomy && self.robot.current_goal.is_none() {
                let next = self.next_waypoint();
                self.set_goal(next, GoalSource::Ai);
            }
        }

        let loa = self.controller.active_loa();
        let command = match loa {
            LoaMode::Teleoperation => {
                let hold = (self.config.teleop_hold / dt).round() as u64;
                match self.teleop {
                    Some((cmd, at)) if self.tick - at <= hold => cmd,
                    _ => VelocityCommand::ZERO,
                }
            }
            LoaMode::Autonomy => {
                let out = self.driver.drive(
                    self.belief.grid(),
                    self.config.inflation,
                    &self.robot,
                    t,
                    &self.config.limits,
                    &self.config.follower,
                );
                if out.goal_reached {
                    self.set_goal(None, GoalSource::Reached);
                    self.driver.clear();
                    VelocityCommand::ZERO
                } else {
                    out.command
                }
            }
        };

        let out = step(&self.truth, &self.robot, command, dt, &self.config.limits);
        let goal = self.robot.current_goal;
        self.robot = out.state;
        self.robot.current_goal = goal;
        self.robot.active_loa = loa;
        self.odometry += out.travelled;
        match loa {
            LoaMode::Teleoperation => self.ticks_teleop += 1,
            LoaMode::Autonomy => self.ticks_autonomy += 1,
        }
        self.tick += 1;
        if out.collided && !self.was_colliding {
            self.log.push(LogRecord::Collision {
                tick: self.tick,
                t: self.t(),
            });
        }
        self.was_colliding = out.collided;

        self.check_waypoint();
        if self.is_running() && self.t() >= self.config.timeout - 1e-9 {
            self.finish(TrialStatus::TimedOut, Some("timeout".into()));
        }
    }

    fn check_waypoint(&mut self) {
        let Some(wp) = self.next_waypoint() else { return };
        let (x, y) = self.truth.center(wp);
        if self.robot.distance_to(x, y) > self.config.waypoint_radius {
            return;
        }
        self.log.push(LogRecord::Waypoint {
            tick: self.tick,
            t: self.t(),
            index: self.next_waypoint,
            cell: wp,
            expert_length: self.leg_expert_length,
            odometry: self.odometry - self.leg_start_odometry,
        });
        self.next_waypoint += 1;
        if self.robot.current_goal == Some(wp) {
            self.set_goal(None, GoalSource::Reached);
            self.driver.clear();
        }
        self.leg_start_odometry = self.odometry;
        match self.next_waypoint() {
            Some(next) => self.leg_expert_length = self.expert_length_to(next),
            None => self.finish(TrialStatus::Completed, None),
        }
    }

    fn finish(&mut self, status: TrialStatus, reason: Option<String>) {
        self.status = status;
        self.log.push(LogRecord::End {
            ticks: self.tick,
            t: self.t(),
            completed: status == TrialStatus::Completed,
            reason,
            ticks_teleop: self.ticks_teleop,
            ticks_autonomy: self.ticks_autonomy,
            odometry: self.odometry,
        });
    }

    /// Ends a running trial early, e.g. when a live session is closed.
    pub fn abort(&mut self, reason: &str) {
        if self.is_running() {
            self.finish(TrialStatus::TimedOut, Some(reason.into()));
        }
    }

    pub fn metrics(&self) -> Result<RunMetrics> {
        if self.is_running() {
            return Err(Error::DecisionLog("trial still running".into()));
        }
        derive_metrics(&self.log)
    }

    pub fn into_log(self) -> Vec<LogRecord> {
        self.log
    }
}
