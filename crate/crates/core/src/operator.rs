//! Scripted operators for headless trials.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attention::HeadPoseSample;
use crate::control::{Initiator, LoaSwitch};
use crate::navigation::{Expert, FollowerConfig};
use crate::world::{
    wrap_angle, Cell, KinematicLimits, LoaMode, OccupancyGrid, RobotState, VelocityCommand,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorProfile {
    /// Fraction of `v_max` the operator drives at in teleoperation.
    pub teleop_skill: f64,
    /// Stdev (rad) of the error added to each heading correction.
    pub steering_noise: f64,
    pub reaction_delay: f64,
    /// Seconds of perceived stall before the operator changes LOA.
    pub manual_switch_patience: f64,
}

impl Default for OperatorProfile {
    fn default() -> Self {
        OperatorProfile {
            teleop_skill: 0.85,
            steering_noise: 0.1,
            reaction_delay: 0.4,
            manual_switch_patience: 4.0,
        }
    }
}

/// Displacement under which the operator considers the robot stalled.
pub const STALL_DISPLACEMENT: f64 = 0.2;
/// Duration of each head turn toward or away from the secondary screen.
pub const HEAD_TURN_TIME: f64 = 0.3;
pub const YAW_JITTER_SD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistractionSchedule {
    pub start: f64,
    pub end: f64,
    pub head_turn_yaw: f64,
    pub item_period: f64,
}

impl DistractionSchedule {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    /// Noise-free yaw: a plateau at `head_turn_yaw` with linear turns at
    /// both ends of the interval.
    pub fn nominal_yaw(&self, t: f64) -> f64 {
        if !self.contains(t) {
            return 0.0;
        }
        let turn = HEAD_TURN_TIME.min((self.end - self.start) / 2.0);
        let k = ((t - self.start) / turn)
            .min((self.end - t) / turn)
            .clamp(0.0, 1.0);
        self.head_turn_yaw * k
    }
}

/// Head-yaw sample at `t` with Gaussian jitter.
pub fn yaw_trace<R: Rng + ?Sized>(
    schedule: Option<&DistractionSchedule>,
    t: f64,
    rng: &mut R,
) -> HeadPoseSample {
    let base = schedule.map_or(0.0, |s| s.nominal_yaw(t));
    let jitter = Normal::new(0.0, YAW_JITTER_SD).expect("valid stdev").sample(rng);
    HeadPoseSample::new(t, base + jitter)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SecondaryScore {
    pub items_presented: u32,
    pub items_completed: u32,
    pub interruptions: u32,
}

/// Secondary-task proxy: items run back to back at `item_period` while the
/// operator is distracted. A switch into teleoperation during the interval
/// voids the item in progress and a fresh item starts at that moment.
pub fn score_secondary(schedule: &DistractionSchedule, switches: &[LoaSwitch]) -> SecondaryScore {
    let mut interrupts: Vec<f64> = switches
        .iter()
        .filter(|s| s.to == LoaMode::Teleoperation && schedule.contains(s.t))
        .map(|s| s.t)
        .collect();
    interrupts.sort_by(f64::total_cmp);
    let eps = 1e-9;
    let mut score = SecondaryScore {
        interruptions: interrupts.len() as u32,
        ..SecondaryScore::default()
    };
    let mut item_start = schedule.start;
    let mut next_interrupt = interrupts.into_iter().peekable();
    while item_start < schedule.end - eps {
        score.items_presented += 1;
        let done_at = item_start + schedule.item_period;
        match next_interrupt.peek() {
            Some(&ti) if ti < done_at - eps => {
                next_interrupt.next();
                item_start = ti.max(item_start);
            }
            _ if done_at <= schedule.end + eps => {
                score.items_completed += 1;
                item_start = done_at;
            }
            _ => break,
        }
    }
    score
}

/// What the operator sees on the console.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub robot: RobotState,
    pub next_waypoint: Option<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorAction {
    pub teleop: Option<VelocityCommand>,
    pub set_goal: Option<Cell>,
    pub request_loa: Option<LoaMode>,
}

impl OperatorAction {
    pub fn is_empty(&self) -> bool {
        self.teleop.is_none() && self.set_goal.is_none() && self.request_loa.is_none()
    }
}

/// Scripted human operator. Its actions depend only on the profile, the seed
/// of the supplied RNG and the observation history.
#[derive(Debug, Clone)]
pub struct ScriptedOperator {
    profile: OperatorProfile,
    distraction: Option<DistractionSchedule>,
    limits: KinematicLimits,
    lookahead: f64,
    allow_switching: bool,
    map: Expert,
    ready_at: f64,
    last_loa: Option<LoaMode>,
    was_distracted: bool,
    goal_pending_since: Option<f64>,
    history: VecDeque<(f64, f64, f64)>,
}

impl ScriptedOperator {
    pub fn new(
        profile: OperatorProfile,
        distraction: Option<DistractionSchedule>,
        truth: &OccupancyGrid,
        inflation: i32,
        limits: KinematicLimits,
        allow_switching: bool,
    ) -> Self {
        let follower = FollowerConfig::default();
        ScriptedOperator {
            profile,
            distraction,
            limits,
            lookahead: follower.lookahead,
            allow_switching,
            map: Expert::new(truth, inflation, limits, follower),
            ready_at: 0.0,
            last_loa: None,
            was_distracted: false,
            goal_pending_since: None,
            history: VecDeque::new(),
        }
    }

    pub fn profile(&self) -> &OperatorProfile {
        &self.profile
    }

    pub fn is_distracted(&self, t: f64) -> bool {
        self.distraction.is_some_and(|d| d.contains(t))
    }

    fn reset_stall(&mut self) {
        self.history.clear();
    }

    fn stalled(&mut self, obs: &Observation) -> bool {
        let patience = self.profile.manual_switch_patience;
        self.history.push_back((obs.t, obs.robot.x, obs.robot.y));
        while self
            .history
            .front()
            .is_some_and(|&(t0, _, _)| t0 < obs.t - patience - 1e-9)
        {
            self.history.pop_front();
        }
        let &(t0, x0, y0) = self.history.front().expect("just pushed");
        obs.t - t0 >= patience - 1e-9
            && self
                .history
                .iter()
                .all(|&(_, x, y)| (x - x0).hypot(y - y0) < STALL_DISPLACEMENT)
    }

    fn drive<R: Rng + ?Sized>(&mut self, obs: &Observation, goal: Cell, rng: &mut R) -> VelocityCommand {
        let Ok(path) = self.map.path(&obs.robot, goal) else {
            return VelocityCommand::ZERO;
        };
        let r = &obs.robot;
        let (lx, ly) = crate::navigation::pursuit_target(&path, r.x, r.y, self.lookahead);
        let noise = Normal::new(0.0, self.profile.steering_noise.max(1e-12))
            .expect("valid stdev")
            .sample(rng);
        let err = wrap_angle((ly - r.y).atan2(lx - r.x) - r.heading + noise);
        let v = self.profile.teleop_skill * self.limits.v_max * err.cos().max(0.0);
        let w = if err.abs() <= std::f64::consts::FRAC_PI_2 {
            2.0 * self.limits.v_max * err.sin() / self.lookahead
        } else {
            self.limits.omega_max * err.signum()
        };
        self.limits.clamp(VelocityCommand::new(v, w)).0
    }

    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> OperatorAction {
        let t = obs.t;
        let loa = obs.robot.active_loa;
        let distracted = self.is_distracted(t);
        if distracted {
            self.was_distracted = true;
            self.goal_pending_since = None;
            self.reset_stall();
            return OperatorAction::default();
        }
        if self.was_distracted {
            self.was_distracted = false;
            self.ready_at = t + self.profile.reaction_delay;
        }
        if self.last_loa != Some(loa) {
            if self.last_loa.is_some() {
                self.ready_at = self.ready_at.max(t + self.profile.reaction_delay);
            }
            self.last_loa = Some(loa);
            self.reset_stall();
        }
        if t < self.ready_at - 1e-9 {
            return OperatorAction::default();
        }
        let Some(next) = obs.next_waypoint else {
            return OperatorAction::default();
        };

        let mut action = OperatorAction::default();
        match loa {
            LoaMode::Teleoperation => {
                action.teleop = Some(self.drive(obs, next, rng));
            }
            LoaMode::Autonomy if obs.robot.current_goal.is_none() => {
                let since = *self.goal_pending_since.get_or_insert(t);
                if t - since >= self.profile.reaction_delay - 1e-9 {
                    action.set_goal = Some(next);
                    self.goal_pending_since = None;
                    self.reset_stall();
                }
                return action;
            }
            LoaMode::Autonomy => {}
        }
        if self.allow_switching && self.stalled(obs) {
            action.teleop = None;
            action.request_loa = Some(loa.other());
            self.reset_stall();
        }
        action
    }
}

/// Count of AI switches out of autonomy taken while the operator was not
/// attending, from `(switch, attending)` pairs.
pub fn unattended_handovers(switches: &[(LoaSwitch, bool)]) -> usize {
    switches
        .iter()
        .filter(|(s, attending)| {
            s.initiator == Initiator::Ai
                && s.from == LoaMode::Autonomy
                && s.to == LoaMode::Teleoperation
                && !attending
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched(start: f64, end: f64) -> DistractionSchedule {
        DistractionSchedule {
            start,
            end,
            head_turn_yaw: 60.0,
            item_period: 4.0,
        }
    }

    fn sw(t: f64, to: LoaMode) -> LoaSwitch {
        LoaSwitch {
            t,
            from: to.other(),
            to,
            initiator: Initiator::Ai,
        }
    }

    #[test]
    fn uninterrupted_items() {
        let s = score_secondary(&sched(10.0, 30.0), &[]);
        assert_eq!(s.items_completed, 5);
        assert_eq!(s.items_presented, 5);
        assert_eq!(s.interruptions, 0);
    }

    #[test]
    fn one_interruption_voids_an_item() {
        let s = score_secondary(&sched(10.0, 30.0), &[sw(16.0, LoaMode::Teleoperation)]);
        assert_eq!(s.items_completed, 4);
        assert_eq!(s.interruptions, 1);
        assert!(s.items_completed <= s.items_presented);
        // Switches into autonomy or outside the interval do not interrupt.
        let s = score_secondary(
            &sched(10.0, 30.0),
            &[sw(16.0, LoaMode::Autonomy), sw(35.0, LoaMode::Teleoperation)],
        );
        assert_eq!((s.items_completed, s.interruptions), (5, 0));
    }

    #[test]
    fn yaw_trace_shape() {
        let d = sched(10.0, 40.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert!(yaw_trace(Some(&d), 5.0, &mut rng).yaw.abs() <= 6.0);
            assert!((yaw_trace(Some(&d), 25.0, &mut rng).yaw - 60.0).abs() <= 6.0);
        }
        assert!((d.nominal_yaw(10.15) - 30.0).abs() < 1e-9);
        assert!((d.nominal_yaw(39.85) - 30.0).abs() < 1e-9);
        assert_eq!(d.nominal_yaw(40.0), 0.0);
    }

    fn corridor() -> OccupancyGrid {
        OccupancyGrid::walled(48, 9, 0.25)
    }

    fn obs(t: f64, robot: &RobotState, next: Option<Cell>) -> Observation {
        Observation {
            t,
            robot: robot.clone(),
            next_waypoint: next,
        }
    }

    #[test]
    fn distracted_operator_is_silent() {
        let g = corridor();
        let mut op = ScriptedOperator::new(
            OperatorProfile::default(),
            Some(sched(0.0, 10.0)),
            &g,
            1,
            KinematicLimits::default(),
            true,
        );
        let r = RobotState::at(1.0, 1.1, 0.0, LoaMode::Teleoperation);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..100 {
            assert!(op.act(&obs(k as f64 * 0.1, &r, Some(Cell::new(40, 4))), &mut rng).is_empty());
        }
    }

    #[test]
    fn idle_autonomy_gets_a_goal_click() {
        let g = corridor();
        let mut op = ScriptedOperator::new(
            OperatorProfile::default(),
            None,
            &g,
            1,
            KinematicLimits::default(),
            true,
        );
        let r = RobotState::at(1.0, 1.1, 0.0, LoaMode::Autonomy);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let goal = Cell::new(40, 4);
        let mut clicked_at = None;
        for k in 0..20 {
            let t = k as f64 * 0.1;
            if let Some(c) = op.act(&obs(t, &r, Some(goal)), &mut rng).set_goal {
                clicked_at = Some((t, c));
                break;
            }
        }
        let (t, c) = clicked_at.expect("operator clicks a goal");
        assert_eq!(c, goal);
        assert!((t - 0.4).abs() < 1e-9);
    }

    #[test]
    fn stalled_autonomy_triggers_manual_switch() {
        let g = corridor();
        let mut op = ScriptedOperator::new(
            OperatorProfile::default(),
            None,
            &g,
            1,
            KinematicLimits::default(),
            true,
        );
        let mut r = RobotState::at(1.0, 1.1, 0.0, LoaMode::Autonomy);
        r.current_goal = Some(Cell::new(40, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut req = None;
        for k in 0..60 {
            let t = k as f64 * 0.1;
            if let Some(m) = op.act(&obs(t, &r, Some(Cell::new(40, 4))), &mut rng).request_loa {
                req = Some((t, m));
                break;
            }
        }
        let (t, m) = req.expect("manual switch");
        assert_eq!(m, LoaMode::Teleoperation);
        assert!((t - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unattended_handover_counting() {
        let a = LoaSwitch {
            t: 1.0,
            from: LoaMode::Autonomy,
            to: LoaMode::Teleoperation,
            initiator: Initiator::Ai,
        };
        let h = LoaSwitch {
            initiator: Initiator::Human,
            ..a
        };
        assert_eq!(unattended_handovers(&[(a, false), (a, true), (h, false)]), 1);
    }
}
