use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::controller::FuzzyInput;
use crate::error::{Error, Result};
use crate::world::LoaMode;

/// A named fuzzy term over one controller input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    ErrorHigh,
    ErrorNotHigh,
    Attending,
    NotAttending,
    SpeedLow,
    SpeedNotLow,
    LoaTeleoperation,
    LoaAutonomy,
}

impl Term {
    pub fn degree(self, input: &FuzzyInput) -> f64 {
        let crisp = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Term::ErrorHigh => input.error_degree_high,
            Term::ErrorNotHigh => 1.0 - input.error_degree_high,
            Term::Attending => input.availability_degree,
            Term::NotAttending => 1.0 - input.availability_degree,
            Term::SpeedLow => input.speed_degree_low,
            Term::SpeedNotLow => 1.0 - input.speed_degree_low,
            Term::LoaTeleoperation => crisp(input.active_loa == LoaMode::Teleoperation),
            Term::LoaAutonomy => crisp(input.active_loa == LoaMode::Autonomy),
        }
    }

    fn loa(self) -> Option<LoaMode> {
        match self {
            Term::LoaTeleoperation => Some(LoaMode::Teleoperation),
            Term::LoaAutonomy => Some(LoaMode::Autonomy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consequent {
    NoSwitch,
    SwitchToTeleoperation,
    SwitchToAutonomy,
}

impl Consequent {
    pub fn target(self) -> Option<LoaMode> {
        match self {
            Consequent::NoSwitch => None,
            Consequent::SwitchToTeleoperation => Some(LoaMode::Teleoperation),
            Consequent::SwitchToAutonomy => Some(LoaMode::Autonomy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Lower fires first.
    pub priority: u32,
    #[serde(rename = "if")]
    pub antecedent: Vec<Term>,
    #[serde(rename = "then")]
    pub consequent: Consequent,
}

impl Rule {
    pub fn new(priority: u32, antecedent: &[Term], consequent: Consequent) -> Self {
        Rule {
            priority,
            antecedent: antecedent.to_vec(),
            consequent,
        }
    }

    /// Min t-norm over the antecedent terms.
    pub fn degree(&self, input: &FuzzyInput) -> f64 {
        self.antecedent
            .iter()
            .map(|t| t.degree(input))
            .fold(1.0, f64::min)
    }
}

/// Ordered rule list. Construction validates and sorts by priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleBaseFile", into = "RuleBaseFile")]
pub struct RuleBase {
    name: String,
    rules: Vec<Rule>,
}

#[derive(Serialize, Deserialize)]
struct RuleBaseFile {
    name: String,
    #[serde(rename = "rule")]
    rules: Vec<Rule>,
}

impl TryFrom<RuleBaseFile> for RuleBase {
    type Error = Error;

    fn try_from(f: RuleBaseFile) -> Result<Self> {
        RuleBase::new(f.name, f.rules)
    }
}

impl From<RuleBase> for RuleBaseFile {
    fn from(r: RuleBase) -> Self {
        RuleBaseFile {
            name: r.name,
            rules: r.rules,
        }
    }
}

impl RuleBase {
    pub fn new(name: impl Into<String>, mut rules: Vec<Rule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::RuleBase("rule base is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.priority) {
                return Err(Error::RuleBase(format!("duplicate priority {}", r.priority)));
            }
            if r.antecedent.is_empty() {
                return Err(Error::RuleBase(format!("rule {} has no antecedent", r.priority)));
            }
            if let Some(target) = r.consequent.target() {
                // A switch rule must only fire from the other LOA.
                let from: Vec<LoaMode> = r.antecedent.iter().filter_map(|t| t.loa()).collect();
                if from != [target.other()] {
                    return Err(Error::RuleBase(format!(
                        "rule {} switches to {target} and must be conditioned on exactly loa_{}",
                        r.priority,
                        target.other()
                    )));
                }
            }
        }
        rules.sort_by_key(|r| r.priority);
        Ok(RuleBase {
            name: name.into(),
            rules,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Switches on sustained high error with the robot slowed down, in either LOA.
    pub fn mi() -> RuleBase {
        use Consequent::*;
        use Term::*;
        RuleBase::new(
            "mi",
            vec![
                Rule::new(10, &[ErrorHigh, SpeedLow, LoaAutonomy], SwitchToTeleoperation),
                Rule::new(20, &[ErrorHigh, SpeedLow, LoaTeleoperation], SwitchToAutonomy),
            ],
        )
        .expect("built-in rule base is valid")
    }

    /// The MI rules preceded by availability rules: an operator who is not
    /// attending always gets (or keeps) autonomy.
    pub fn caa_mi() -> RuleBase {
        use Consequent::*;
        use Term::*;
        let mut rules = vec![
            Rule::new(1, &[NotAttending, LoaTeleoperation], SwitchToAutonomy),
            Rule::new(2, &[NotAttending, LoaAutonomy], NoSwitch),
        ];
        rules.extend(RuleBase::mi().rules);
        RuleBase::new("caa-mi", rules).expect("built-in rule base is valid")
    }

    pub fn from_toml(text: &str) -> Result<RuleBase> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("rule base serializes")
    }

    pub fn load(path: &Path) -> Result<RuleBase> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
