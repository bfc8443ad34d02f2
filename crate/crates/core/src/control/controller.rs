use serde::{Deserialize, Serialize};

use super::rules::{Consequent, RuleBase};
use super::window::MotionErrorWindow;
use crate::attention::AvailabilityEstimate;
use crate::world::LoaMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Mi,
    CaaMi,
    TeleopOnly,
    AutonomyOnly,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Mi => "mi",
            Variant::CaaMi => "caa-mi",
            Variant::TeleopOnly => "teleop",
            Variant::AutonomyOnly => "autonomy",
        }
    }

    /// Variants in which the LOA never changes.
    pub fn fixed_loa(self) -> Option<LoaMode> {
        match self {
            Variant::TeleopOnly => Some(LoaMode::Teleoperation),
            Variant::AutonomyOnly => Some(LoaMode::Autonomy),
            _ => None,
        }
    }

    pub fn default_rules(self) -> Option<RuleBase> {
        match self {
            Variant::Mi => Some(RuleBase::mi()),
            Variant::CaaMi => Some(RuleBase::caa_mi()),
            _ => None,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mi" => Ok(Variant::Mi),
            "caa-mi" | "caami" | "caa_mi" => Ok(Variant::CaaMi),
            "teleop" | "teleop-only" => Ok(Variant::TeleopOnly),
            "autonomy" | "autonomy-only" => Ok(Variant::AutonomyOnly),
            other => Err(format!("unknown variant {other:?} (mi|caa-mi|teleop|autonomy)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Error membership rises from `error_low` to `error_high` (m/s).
    pub error_low: f64,
    pub error_high: f64,
    /// Speed membership falls from `speed_low` to `speed_high` (m/s).
    pub speed_low: f64,
    pub speed_high: f64,
    pub window_length: f64,
    pub activation_threshold: f64,
    /// Seconds after any switch during which AI switches are suppressed.
    pub cooldown: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            error_low: 0.1,
            error_high: 0.3,
            speed_low: 0.1,
            speed_high: 0.3,
            window_length: 5.0,
            activation_threshold: 0.5,
            cooldown: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyInput {
    pub error_degree_high: f64,
    pub availability_degree: f64,
    pub active_loa: LoaMode,
    pub speed_degree_low: f64,
}

fn rising(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        0.0
    } else if x >= hi {
        1.0
    } else {
        (x - lo) / (hi - lo)
    }
}

pub fn fuzzify(
    mean_error: f64,
    availability: &AvailabilityEstimate,
    loa: LoaMode,
    speed: f64,
    config: &ControllerConfig,
) -> FuzzyInput {
    FuzzyInput {
        error_degree_high: rising(mean_error, config.error_low, config.error_high),
        availability_degree: availability.attending_degree.clamp(0.0, 1.0),
        active_loa: loa,
        speed_degree_low: 1.0 - rising(speed.abs(), config.speed_low, config.speed_high),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "target")]
pub enum SwitchAction {
    NoSwitch,
    Switch(LoaMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchDecision {
    pub action: SwitchAction,
    /// Priority of the rule that determined the output, if any fired.
    pub firing_rule: Option<u32>,
    pub activation: f64,
}

/// Hierarchical bang-bang inference.
///
/// Rules are scanned in priority order and the first whose degree reaches
/// `activation_threshold` decides. Only that rule contributes to the output
/// set, so largest-of-maxima yields its consequent crisply. No firing rule
/// means no switch.
pub fn infer(rules: &RuleBase, input: &FuzzyInput, activation_threshold: f64) -> SwitchDecision {
    for rule in rules.rules() {
        let degree = rule.degree(input);
        if degree >= activation_threshold {
            let action = match rule.consequent {
                Consequent::NoSwitch => SwitchAction::NoSwitch,
                c => {
                    let target = c.target().expect("switch consequent has a target");
                    if target == input.active_loa {
                        SwitchAction::NoSwitch
                    } else {
                        SwitchAction::Switch(target)
                    }
                }
            };
            return SwitchDecision {
                action,
                firing_rule: Some(rule.priority),
                activation: degree,
            };
        }
    }
    SwitchDecision {
        action: SwitchAction::NoSwitch,
        firing_rule: None,
        activation: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initiator {
    Ai,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoaSwitch {
    pub t: f64,
    pub from: LoaMode,
    pub to: LoaMode,
    pub initiator: Initiator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerInputs {
    pub expert_speed: f64,
    pub actual_speed: f64,
    pub availability: AvailabilityEstimate,
}

/// One controller evaluation, as logged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    pub mean_error: f64,
    pub input: FuzzyInput,
    pub decision: SwitchDecision,
    /// A switch the rules asked for but the cooldown withheld.
    pub suppressed: bool,
    pub issued: Option<LoaSwitch>,
}

/// The AI side of the mixed-initiative system: a deterministic state machine
/// advanced once per tick.
#[derive(Debug, Clone)]
pub struct Controller {
    variant: Variant,
    rules: Option<RuleBase>,
    config: ControllerConfig,
    window: MotionErrorWindow,
    active: LoaMode,
    last_switch: Option<f64>,
}

impl Controller {
    pub fn new(variant: Variant, config: ControllerConfig, initial: LoaMode) -> Self {
        Self::with_rules(variant, variant.default_rules(), config, initial)
    }

    pub fn with_rules(
        variant: Variant,
        rules: Option<RuleBase>,
        config: ControllerConfig,
        initial: LoaMode,
    ) -> Self {
        Controller {
            variant,
            rules: if variant.fixed_loa().is_some() { None } else { rules },
            config,
            window: MotionErrorWindow::new(config.window_length),
            active: variant.fixed_loa().unwrap_or(initial),
            last_switch: None,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn active_loa(&self) -> LoaMode {
        self.active
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn rules(&self) -> Option<&RuleBase> {
        self.rules.as_ref()
    }

    pub fn mean_error(&self) -> f64 {
        self.window.mean_error()
    }

    pub fn window(&self) -> &MotionErrorWindow {
        &self.window
    }

    /// Called when the navigation goal changes.
    pub fn reset_window(&mut self) {
        self.window.reset();
    }

    fn in_cooldown(&self, t: f64) -> bool {
        self.last_switch
            .is_some_and(|last| t - last < self.config.cooldown - 1e-9)
    }

    fn switch_to(&mut self, to: LoaMode, t: f64, initiator: Initiator) -> LoaSwitch {
        let sw = LoaSwitch {
            t,
            from: self.active,
            to,
            initiator,
        };
        self.active = to;
        self.last_switch = Some(t);
        self.window.reset();
        sw
    }

    pub fn decide(&mut self, inputs: &ControllerInputs, t: f64) -> DecisionRecord {
        self.window
            .update(inputs.expert_speed, inputs.actual_speed, t);
        let mean_error = self.window.mean_error();
        // MI is blind to the operator: availability is pinned to full.
        let availability = match self.variant {
            Variant::Mi => AvailabilityEstimate::FULL,
            _ => inputs.availability,
        };
        let input = fuzzify(
            mean_error,
            &availability,
            self.active,
            inputs.actual_speed,
            &self.config,
        );
        let decision = match &self.rules {
            Some(rules) => infer(rules, &input, self.config.activation_threshold),
            None => SwitchDecision {
                action: SwitchAction::NoSwitch,
                firing_rule: None,
                activation: 0.0,
            },
        };
        let (suppressed, issued) = match decision.action {
            SwitchAction::Switch(_) if self.in_cooldown(t) => (true, None),
            SwitchAction::Switch(to) => (false, Some(self.switch_to(to, t, Initiator::Ai))),
            SwitchAction::NoSwitch => (false, None),
        };
        DecisionRecord {
            t,
            mean_error,
            input,
            decision,
            suppressed,
            issued,
        }
    }

    /// Operator requests are honored immediately; requesting the active LOA is
    /// a no-op. Fixed-LOA baselines ignore requests.
    pub fn apply_operator_switch(&mut self, requested: LoaMode, t: f64) -> Option<LoaSwitch> {
        if self.variant.fixed_loa().is_some() || requested == self.active {
            return None;
        }
        Some(self.switch_to(requested, t, Initiator::Human))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{classify, YawCalibration};

    fn input(e: f64, a: f64, loa: LoaMode, s: f64) -> FuzzyInput {
        FuzzyInput {
            error_degree_high: e,
            availability_degree: a,
            active_loa: loa,
            speed_degree_low: s,
        }
    }

    #[test]
    fn fuzzify_examples() {
        let cfg = ControllerConfig::default();
        let att = AvailabilityEstimate::FULL;
        assert_eq!(fuzzify(0.0, &att, LoaMode::Autonomy, 1.0, &cfg).error_degree_high, 0.0);
        assert!((fuzzify(0.2, &att, LoaMode::Autonomy, 1.0, &cfg).error_degree_high - 0.5).abs() < 1e-12);
        assert_eq!(fuzzify(0.0, &att, LoaMode::Autonomy, 0.0, &cfg).speed_degree_low, 1.0);
        assert_eq!(fuzzify(0.0, &att, LoaMode::Autonomy, 0.5, &cfg).speed_degree_low, 0.0);
        let away = classify(45.0, &YawCalibration::default());
        let fi = fuzzify(0.0, &away, LoaMode::Teleoperation, 0.0, &cfg);
        assert_eq!(fi.availability_degree, 0.0);
        assert_eq!(fi.active_loa, LoaMode::Teleoperation);
    }

    #[test]
    fn caa_mi_not_attending_teleop_switches_to_autonomy() {
        let rb = RuleBase::caa_mi();
        for e in [0.0, 0.5, 1.0] {
            for s in [0.0, 1.0] {
                let d = infer(&rb, &input(e, 0.0, LoaMode::Teleoperation, s), 0.5);
                assert_eq!(d.action, SwitchAction::Switch(LoaMode::Autonomy));
                let d = infer(&rb, &input(e, 0.0, LoaMode::Autonomy, s), 0.5);
                assert_eq!(d.action, SwitchAction::NoSwitch);
                assert_eq!(d.firing_rule, Some(2));
            }
        }
    }

    #[test]
    fn attending_without_error_never_switches() {
        for rb in [RuleBase::mi(), RuleBase::caa_mi()] {
            for loa in [LoaMode::Teleoperation, LoaMode::Autonomy] {
                for s in [0.0, 0.5, 1.0] {
                    let d = infer(&rb, &input(0.0, 1.0, loa, s), 0.5);
                    assert_eq!(d.action, SwitchAction::NoSwitch);
                    assert_eq!(d.firing_rule, None);
                }
            }
        }
    }

    fn stuck_inputs(attending: bool) -> ControllerInputs {
        ControllerInputs {
            expert_speed: 1.0,
            actual_speed: 0.0,
            availability: if attending {
                AvailabilityEstimate::FULL
            } else {
                classify(60.0, &YawCalibration::default())
            },
        }
    }

    #[test]
    fn sustained_error_in_autonomy_hands_over_after_window() {
        let mut c = Controller::new(Variant::CaaMi, ControllerConfig::default(), LoaMode::Autonomy);
        let mut issued = None;
        for k in 0..=60 {
            let t = k as f64 * 0.1;
            let r = c.decide(&stuck_inputs(true), t);
            if let Some(sw) = r.issued {
                issued = Some(sw);
                break;
            }
        }
        let sw = issued.expect("switch issued");
        assert_eq!(sw.to, LoaMode::Teleoperation);
        assert_eq!(sw.initiator, Initiator::Ai);
        // Error must accumulate for a full window first.
        assert!((sw.t - 5.0).abs() < 1e-9);
        assert_eq!(c.mean_error(), 0.0);
    }

    #[test]
    fn cooldown_suppresses_ai_switch() {
        let cfg = ControllerConfig {
            window_length: 0.5,
            ..ControllerConfig::default()
        };
        let mut c = Controller::new(Variant::Mi, cfg, LoaMode::Autonomy);
        c.apply_operator_switch(LoaMode::Teleoperation, 0.0).unwrap();
        c.apply_operator_switch(LoaMode::Autonomy, 0.0).unwrap();
        let mut suppressed_at = Vec::new();
        let mut issued_at = None;
        for k in 1..=40 {
            let t = k as f64 * 0.1;
            let r = c.decide(&stuck_inputs(true), t);
            if r.suppressed {
                suppressed_at.push(t);
            }
            if r.issued.is_some() {
                issued_at = Some(t);
                break;
            }
        }
        assert!(suppressed_at.iter().any(|&t| (t - 1.0).abs() < 1e-9));
        assert!((issued_at.unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn operator_switch_is_immediate_and_idempotent() {
        let mut c = Controller::new(Variant::CaaMi, ControllerConfig::default(), LoaMode::Autonomy);
        let sw = c.apply_operator_switch(LoaMode::Teleoperation, 2.0).unwrap();
        assert_eq!(sw.initiator, Initiator::Human);
        assert_eq!((sw.from, sw.to), (LoaMode::Autonomy, LoaMode::Teleoperation));
        assert!(c.apply_operator_switch(LoaMode::Teleoperation, 2.1).is_none());
        assert_eq!(c.active_loa(), LoaMode::Teleoperation);
    }

    #[test]
    fn fixed_variants_never_switch() {
        let mut c = Controller::new(Variant::AutonomyOnly, ControllerConfig::default(), LoaMode::Teleoperation);
        assert_eq!(c.active_loa(), LoaMode::Autonomy);
        assert!(c.apply_operator_switch(LoaMode::Teleoperation, 0.0).is_none());
        for k in 0..100 {
            assert!(c.decide(&stuck_inputs(false), k as f64 * 0.1).issued.is_none());
        }
    }

    #[test]
    fn mi_ignores_availability() {
        let mut c = Controller::new(Variant::Mi, ControllerConfig::default(), LoaMode::Teleoperation);
        let r = c.decide(&stuck_inputs(false), 0.0);
        assert_eq!(r.input.availability_degree, 1.0);
        assert!(r.issued.is_none());
    }

    #[test]
    fn variant_names_parse() {
        for v in [Variant::Mi, Variant::CaaMi, Variant::TeleopOnly, Variant::AutonomyOnly] {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("bogus".parse::<Variant>().is_err());
    }
}
