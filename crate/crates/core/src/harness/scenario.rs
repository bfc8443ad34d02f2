use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::{RuleBase, Variant};
use crate::engine::{stream_rng, EngineConfig, EngineSetup, STREAM_PLACEMENT};
use crate::error::{Error, Result};
use crate::operator::{DistractionSchedule, OperatorProfile};
use crate::world::{Cell, LoaMode, MapFile, NoiseSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// No degradation at all.
    None,
    /// Intervals given explicitly by `noise` and `distraction`.
    Fixed,
    /// A noise interval placed uniformly in `window`, with the distraction
    /// interval placed uniformly inside it.
    RandomOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationSpec {
    pub mode: Placement,
    pub noise_duration: f64,
    pub distraction_duration: f64,
    pub window: [f64; 2],
    pub noise: Option<[f64; 2]>,
    pub distraction: Option<[f64; 2]>,
    pub phantom_rate: f64,
    pub head_turn_yaw: f64,
    pub item_period: f64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        DegradationSpec {
            mode: Placement::RandomOverlap,
            noise_duration: 60.0,
            distraction_duration: 30.0,
            window: [10.0, 100.0],
            noise: None,
            distraction: None,
            phantom_rate: 0.08,
            head_turn_yaw: 60.0,
            item_period: 4.0,
        }
    }
}

impl DegradationSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(m.into()));
        if !(0.0..=1.0).contains(&self.phantom_rate) {
            return bad("phantom_rate must lie in [0, 1]");
        }
        if self.item_period <= 0.0 {
            return bad("item_period must be positive");
        }
        match self.mode {
            Placement::None => {}
            Placement::Fixed => {
                for iv in [self.noise, self.distraction].into_iter().flatten() {
                    if iv[0] >= iv[1] || iv[0] < 0.0 {
                        return bad("fixed intervals need 0 <= start < end");
                    }
                }
            }
            Placement::RandomOverlap => {
                if self.distraction_duration <= 0.0 || self.distraction_duration > self.noise_duration {
                    return bad("distraction must be positive and no longer than the noise interval");
                }
                if self.window[0] < 0.0 || self.window[1] - self.window[0] < self.noise_duration {
                    return bad("placement window shorter than the noise interval");
                }
            }
        }
        Ok(())
    }

    /// Degradation intervals for one seed. Every variant run on the same
    /// seed sees the same placement.
    pub fn resolve(&self, seed: u64) -> (Option<NoiseSchedule>, Option<DistractionSchedule>) {
        let distraction = |start: f64, end: f64| DistractionSchedule {
            start,
            end,
            head_turn_yaw: self.head_turn_yaw,
            item_period: self.item_period,
        };
        match self.mode {
            Placement::None => (None, None),
            Placement::Fixed => (
                self.noise
                    .and_then(|[a, b]| NoiseSchedule::new(a, b, self.phantom_rate)),
                self.distraction.map(|[a, b]| distraction(a, b)),
            ),
            Placement::RandomOverlap => {
                let mut rng = stream_rng(seed, STREAM_PLACEMENT);
                let ns = rng.random_range(self.window[0]..=self.window[1] - self.noise_duration);
                let ds = rng.random_range(ns..=ns + self.noise_duration - self.distraction_duration);
                (
                    NoiseSchedule::new(ns, ns + self.noise_duration, self.phantom_rate),
                    Some(distraction(ds, ds + self.distraction_duration)),
                )
            }
        }
    }
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// Relative paths resolve against the scenario file's directory.
    pub map: PathBuf,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    pub start: char,
    #[serde(default)]
    pub start_heading: f64,
    pub waypoints: Vec<char>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_loa")]
    pub initial_loa: LoaMode,
    #[serde(default)]
    pub seed: u64,
    /// Optional rule base replacing the variant's built-in one.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub degradation: DegradationSpec,
    #[serde(default)]
    pub operator: OperatorProfile,
    #[serde(default)]
    pub engine: EngineConfig,
}

fn default_resolution() -> f64 {
    0.25
}

fn default_variant() -> Variant {
    Variant::CaaMi
}

fn default_loa() -> LoaMode {
    LoaMode::Autonomy
}

/// A validated scenario with its map loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub map: MapFile,
    pub rules: Option<RuleBase>,
    start: Cell,
    waypoints: Vec<Cell>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Scenario> {
        let file: ScenarioFile = toml::from_str(text)?;
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let map = MapFile::load(&resolve(&file.map), file.resolution)?;
        let rules = file
            .rules
            .as_deref()
            .map(|p| RuleBase::load(&resolve(p)))
            .transpose()?;
        Scenario::new(file, map, rules)
    }

    pub fn new(file: ScenarioFile, map: MapFile, rules: Option<RuleBase>) -> Result<Scenario> {
        map.require_closed()?;
        file.degradation.validate()?;
        let cfg = &file.engine;
        if cfg.dt <= 0.0 || cfg.timeout <= 0.0 || cfg.waypoint_radius <= 0.0 {
            return Err(Error::Scenario("dt, timeout and waypoint_radius must be positive".into()));
        }
        let label = |ch: char| {
            map.label(ch)
                .ok_or_else(|| Error::Scenario(format!("label {ch:?} is not on the map")))
        };
        let start = label(file.start)?;
        let waypoints = file.waypoints.iter().map(|&c| label(c)).collect::<Result<Vec<_>>>()?;
        if waypoints.is_empty() {
            return Err(Error::Scenario("no waypoints".into()));
        }
        Ok(Scenario {
            file,
            map,
            rules,
            start,
            waypoints,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn waypoints(&self) -> &[Cell] {
        &self.waypoints
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn setup(&self, variant: Variant, seed: u64) -> EngineSetup {
        let (noise, distraction) = self.file.degradation.resolve(seed);
        EngineSetup {
            scenario: self.file.name.clone(),
            truth: self.map.grid.clone(),
            start: self.start,
            start_heading: self.file.start_heading,
            waypoints: self.waypoints.clone(),
            initial_loa: self.file.initial_loa,
            variant,
            rules: self.rules.clone(),
            noise,
            distraction,
            seed,
            config: self.file.engine,
        }
    }
}
