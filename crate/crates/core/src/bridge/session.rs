use serde::{Deserialize, Serialize};

use crate::control::Variant;
use crate::engine::{Command, Engine, LogRecord, TelemetrySnapshot};
use crate::error::Result;
use crate::harness::Scenario;

use super::protocol::{ClientMessage, MapInfo, ServerMessage, PROTOCOL_VERSION};

/// Seconds without a yaw sample before a live session applies the dropout rule.
pub const LIVE_DROPOUT_GRACE: f64 = 1.0;

/// Everything needed to reproduce a live session headless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub variant: Variant,
    pub seed: u64,
    pub ticks: u64,
    /// Commands with the tick boundary at which they were applied.
    pub commands: Vec<(u64, Command)>,
}

/// A live simulation driven by bridge messages instead of a scripted operator.
#[derive(Debug)]
pub struct Session {
    scenario: Scenario,
    variant: Variant,
    seed: u64,
    engine: Engine,
    paused: bool,
    commands: Vec<(u64, Command)>,
}

impl Session {
    pub fn new(scenario: Scenario, variant: Variant, seed: u64) -> Result<Session> {
        let engine = Self::start(&scenario, variant, seed)?;
        Ok(Session {
            scenario,
            variant,
            seed,
            engine,
            paused: false,
            commands: Vec::new(),
        })
    }

    fn start(scenario: &Scenario, variant: Variant, seed: u64) -> Result<Engine> {
        let mut setup = scenario.setup(variant, seed);
        setup.config.attention.dropout_grace = LIVE_DROPOUT_GRACE;
        // A human replaces the scripted operator, so there is no scheduled distraction.
        setup.distraction = None;
        let mut engine = Engine::new(setup)?;
        engine.track_belief_changes(true);
        Ok(engine)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn log(&self) -> &[LogRecord] {
        self.engine.log()
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::Hello {
            version: PROTOCOL_VERSION,
            scenario: self.scenario.name().to_string(),
            variant: self.variant,
            seed: self.seed,
            dt: self.engine.config().dt,
            waypoints: self.scenario.waypoints().to_vec(),
            map: MapInfo::of(self.engine.belief()),
        }
    }

    /// Handles one message at the current tick boundary and returns the
    /// reply. A reset also yields a fresh hello.
    pub fn handle(&mut self, seq: Option<u64>, msg: ClientMessage) -> Vec<ServerMessage> {
        let ack = |ignored, clamped| ServerMessage::Ack { seq, ignored, clamped };
        match msg {
            ClientMessage::Pause => {
                let was = self.paused;
                self.paused = true;
                vec![ack(was, false)]
            }
            ClientMessage::Resume => {
                let was = self.paused;
                self.paused = false;
                vec![ack(!was, false)]
            }
            ClientMessage::Reset { seed } => {
                let seed = seed.unwrap_or(self.seed);
                match Self::start(&self.scenario, self.variant, seed) {
                    Ok(engine) => {
                        self.engine = engine;
                        self.seed = seed;
                        self.paused = false;
                        self.commands.clear();
                        vec![ack(false, false), self.hello()]
                    }
                    Err(e) => vec![ServerMessage::Error {
                        seq,
                        reason: e.to_string(),
                    }],
                }
            }
            other => {
                let cmd = other.command().expect("engine command");
                match self.engine.apply(cmd) {
                    Ok(applied) => {
                        self.commands.push((self.engine.tick_count(), cmd));
                        vec![ack(applied.ignored, applied.clamped)]
                    }
                    Err(reason) => vec![ServerMessage::Error { seq, reason }],
                }
            }
        }
    }

    /// Advances one tick unless paused or finished.
    pub fn step(&mut self) {
        if !self.paused {
            self.engine.tick();
        }
    }

    pub fn snapshot(&mut self) -> TelemetrySnapshot {
        self.engine.snapshot()
    }

    pub fn recording(&self) -> Recording {
        Recording {
            variant: self.variant,
            seed: self.seed,
            ticks: self.engine.tick_count(),
            commands: self.commands.clone(),
        }
    }

    /// Re-runs a recorded session without a client and returns the engine in
    /// its final state.
    pub fn replay(scenario: &Scenario, rec: &Recording) -> Result<Engine> {
        let mut engine = Self::start(scenario, rec.variant, rec.seed)?;
        let mut cmds = rec.commands.iter().peekable();
        loop {
            let k = engine.tick_count();
            while let Some((_, c)) = cmds.next_if(|(at, _)| *at == k) {
                let _ = engine.apply(*c);
            }
            if k >= rec.ticks || !engine.is_running() {
                break;
            }
            engine.tick();
        }
        Ok(engine)
    }
}
