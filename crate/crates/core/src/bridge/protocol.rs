//! Wire format: one JSON object per line, discriminated by `type`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::Variant;
use crate::engine::{Command, TelemetrySnapshot};
use crate::error::{Error, Result};
use crate::world::{Cell, LoaMode, OccupancyGrid};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Teleop { v: f64, w: f64 },
    SetGoal { cell: Cell },
    RequestLoa { mode: LoaMode },
    Yaw { deg: f64 },
    Pause,
    Resume,
    /// Restarts the served scenario, optionally under another seed.
    Reset { seed: Option<u64> },
}

impl ClientMessage {
    pub fn command(self) -> Option<Command> {
        match self {
            ClientMessage::Teleop { v, w } => Some(Command::Teleop { v, w }),
            ClientMessage::SetGoal { cell } => Some(Command::SetGoal { cell }),
            ClientMessage::RequestLoa { mode } => Some(Command::RequestLoa { mode }),
            ClientMessage::Yaw { deg } => Some(Command::Yaw { deg }),
            _ => None,
        }
    }
}

/// A client line with its optional `seq`, which is echoed in the reply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub seq: Option<u64>,
    pub message: ClientMessage,
}

/// Parses one client line. On failure returns whatever `seq` could be read
/// so the error reply can reference it.
pub fn parse_client_line(line: &str) -> std::result::Result<Envelope, (Option<u64>, String)> {
    let mut value: Value = serde_json::from_str(line).map_err(|e| (None, format!("malformed json: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or((None, "message must be a json object".to_string()))?;
    let seq = match obj.remove("seq") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or((None, "seq must be a non-negative integer".to_string()))?),
    };
    let message = serde_json::from_value(value).map_err(|e| (seq, e.to_string()))?;
    Ok(Envelope { seq, message })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapInfo {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// Top row first; `#` occupied, `.` free.
    pub rows: Vec<String>,
}

impl MapInfo {
    pub fn of(grid: &OccupancyGrid) -> MapInfo {
        let rows = (0..grid.height())
            .rev()
            .map(|y| {
                (0..grid.width())
                    .map(|x| {
                        if grid.is_occupied(Cell::new(x as i32, y as i32)) {
                            '#'
                        } else {
                            '.'
                        }
                    })
                    .collect()
            })
            .collect();
        MapInfo {
            width: grid.width(),
            height: grid.height(),
            resolution: grid.resolution(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        version: u32,
        scenario: String,
        variant: Variant,
        seed: u64,
        dt: f64,
        waypoints: Vec<Cell>,
        /// Belief map at session start; telemetry carries deltas from here.
        map: MapInfo,
    },
    Ack {
        seq: Option<u64>,
        ignored: bool,
        clamped: bool,
    },
    Error {
        seq: Option<u64>,
        reason: String,
    },
    Telemetry(TelemetrySnapshot),
}

pub fn encode(msg: &ServerMessage) -> String {
    let mut s = serde_json::to_string(msg).expect("server messages serialize");
    s.push('\n');
    s
}

pub fn decode_server_line(line: &str) -> Result<ServerMessage> {
    serde_json::from_str(line).map_err(|e| Error::Protocol(e.to_string()))
}
