use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, Occupancy, OccupancyGrid};
use super::sensor::{LaserScan, RayWalk};
use super::RobotState;

/// Beam endpoints are nudged past the surface so a return on a cell boundary
/// lands in the cell that produced it.
const ENDPOINT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefConfig {
    /// Seconds of continuous free observation after which a non-prior
    /// occupied cell reverts to free. `None` disables decay.
    pub decay_after: Option<f64>,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig {
            decay_after: Some(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellChange {
    pub cell: Cell,
    pub occupied: bool,
}

/// The planner's view of the arena: the prior map plus laser returns.
#[derive(Debug, Clone)]
pub struct Belief {
    grid: OccupancyGrid,
    prior: Vec<bool>,
    free_since: Vec<Option<f64>>,
    config: BeliefConfig,
    changes: Vec<CellChange>,
}

impl Belief {
    pub fn new(prior: &OccupancyGrid, config: BeliefConfig) -> Self {
        Belief {
            grid: prior.clone(),
            prior: prior
                .cells()
                .iter()
                .map(|&c| c == Occupancy::Occupied)
                .collect(),
            free_since: vec![None; prior.len()],
            config,
            changes: Vec::new(),
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    /// Cells whose belief changed since the last call.
    pub fn take_changes(&mut self) -> Vec<CellChange> {
        std::mem::take(&mut self.changes)
    }

    /// Marks beam endpoints occupied and ages occupied cells that beams pass
    /// through. Beams at max range carry no endpoint.
    pub fn integrate(&mut self, scan: &LaserScan, state: &RobotState) {
        let t = scan.timestamp;
        let mut hits = BTreeSet::new();
        let mut passed = Vec::new();
        for beam in &scan.ranges {
            let angle = state.heading + beam.bearing;
            let has_return = beam.distance < scan.max_range;
            let endpoint = if has_return {
                let d = beam.distance + ENDPOINT_EPS;
                self.grid
                    .cell_at(state.x + d * angle.cos(), state.y + d * angle.sin())
            } else {
                None
            };
            for (cell, entry) in RayWalk::new(&self.grid, state.x, state.y, angle, beam.distance) {
                if Some(cell) == endpoint || (has_return && entry >= beam.distance) {
                    break;
                }
                passed.push(cell);
            }
            if let Some(c) = endpoint {
                hits.insert(c);
            }
        }

        if let Some(decay) = self.config.decay_after {
            for cell in passed {
                if hits.contains(&cell) {
                    continue;
                }
                let Some(i) = self.grid.index(cell) else { continue };
                if self.prior[i] || self.grid.cells()[i] == Occupancy::Free {
                    continue;
                }
                let since = *self.free_since[i].get_or_insert(t);
                if t - since >= decay - 1e-9 {
                    self.grid.set(cell, Occupancy::Free);
                    self.free_since[i] = None;
                    self.changes.push(CellChange {
                        cell,
                        occupied: false,
                    });
                }
            }
        }

        for cell in hits {
            let i = self.grid.index(cell).expect("endpoint inside grid");
            self.free_since[i] = None;
            if self.grid.cells()[i] == Occupancy::Free {
                self.grid.set(cell, Occupancy::Occupied);
                self.changes.push(CellChange {
                    cell,
                    occupied: true,
                });
            }
        }
    }
}
