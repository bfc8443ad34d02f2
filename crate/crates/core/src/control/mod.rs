//! Level-of-autonomy switching: the goal-directed motion error window,
//! fuzzification of the four controller inputs, hierarchical rule bases and
//! the MI / CAA-MI controllers built from them.

mod controller;
mod rules;
mod window;

pub use controller::{
    fuzzify, infer, Controller, ControllerConfig, ControllerInputs, DecisionRecord, FuzzyInput,
    Initiator, LoaSwitch, SwitchAction, SwitchDecision, Variant,
};
pub use rules::{Consequent, Rule, RuleBase, Term};
pub use window::MotionErrorWindow;
