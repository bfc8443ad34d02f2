use crate::control::Variant;
use crate::engine::{stream_rng, Command, Engine, LogRecord, RunMetrics, STREAM_OPERATOR, STREAM_YAW};
use crate::error::Result;
use crate::operator::{yaw_trace, ScriptedOperator};

use super::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub variant: Variant,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub log: Vec<LogRecord>,
}

/// Runs one headless trial with the scenario's scripted operator.
pub fn run_trial(scenario: &Scenario, variant: Variant, seed: u64) -> Result<TrialOutput> {
    let setup = scenario.setup(variant, seed);
    let distraction = setup.distraction;
    let cfg = setup.config;
    let mut operator = ScriptedOperator::new(
        scenario.file.operator,
        distraction,
        &setup.truth,
        cfg.inflation,
        cfg.limits,
        variant.fixed_loa().is_none(),
    );
    let mut engine = Engine::new(setup)?;
    let mut op_rng = stream_rng(seed, STREAM_OPERATOR);
    let mut yaw_rng = stream_rng(seed, STREAM_YAW);

    while engine.is_running() {
        let t = engine.t();
        let yaw = yaw_trace(distraction.as_ref(), t, &mut yaw_rng);
        let _ = engine.apply(Command::Yaw { deg: yaw.yaw });
        let action = operator.act(&engine.observation(), &mut op_rng);
        // Rejections (e.g. a goal on a phantom obstacle) leave the operator
        // to retry on a later tick, as a human would.
        if let Some(mode) = action.request_loa {
            let _ = engine.apply(Command::RequestLoa { mode });
        }
        if let Some(cell) = action.set_goal {
            let _ = engine.apply(Command::SetGoal { cell });
        }
        if let Some(c) = action.teleop {
            let _ = engine.apply(Command::Teleop {
                v: c.linear,
                w: c.angular,
            });
        }
        engine.tick();
    }
    let metrics = engine.metrics()?;
    Ok(TrialOutput {
        variant,
        seed,
        metrics,
        log: engine.into_log(),
    })
}
