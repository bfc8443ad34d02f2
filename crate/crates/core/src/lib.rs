//! Mixed-initiative variable-autonomy control in a deterministic 2D robot
//! simulation.
//!
//! The crate is organised bottom-up:
//!
//! * [`world`] - occupancy grids, differential-drive kinematics, laser
//!   ray-casting with phantom-return noise and the belief map.
//! * [`navigation`] - octile A* planning, pure-pursuit following and the
//!   idealized-map expert used to measure goal-directed motion error.
//! * [`attention`] - head-yaw EMA filtering and availability classification.
//! * [`control`] - error window, fuzzification, hierarchical rule bases and
//!   the MI / CAA-MI level-of-autonomy switching controller.
//! * [`operator`] - scripted operators, distraction schedules and the
//!   secondary-task score proxy.
//! * [`engine`] - the tick loop shared by headless trials and live sessions.
//! * [`harness`] - scenarios, trials, paired batches and reports.
//! * [`bridge`] - line-delimited JSON bridge for a live operator console.

pub mod attention;
pub mod bridge;
pub mod control;
pub mod engine;
pub mod error;
pub mod harness;
pub mod navigation;
pub mod operator;
pub mod world;

pub use error::{Error, Result};
pub use world::{Cell, LoaMode, OccupancyGrid, RobotState};
