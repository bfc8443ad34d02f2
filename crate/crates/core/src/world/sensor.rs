use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, OccupancyGrid};
use super::RobotState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    pub beams: usize,
    pub max_range: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        LaserConfig {
            beams: 72,
            max_range: 10.0,
        }
    }
}

impl LaserConfig {
    /// Beam bearings relative to the robot heading, evenly spread over a full turn.
    pub fn bearings(&self) -> impl Iterator<Item = f64> + '_ {
        let step = std::f64::consts::TAU / self.beams as f64;
        (0..self.beams).map(move |i| i as f64 * step)
    }
}

/// Phantom-return noise active over `[start, end)`.
///
/// Shortened beams show up as transient fake obstacles in the belief map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub start: f64,
    pub end: f64,
    pub phantom_rate: f64,
}

impl NoiseSchedule {
    pub fn new(start: f64, end: f64, phantom_rate: f64) -> Option<Self> {
        (start < end && (0.0..=1.0).contains(&phantom_rate)).then_some(NoiseSchedule {
            start,
            end,
            phantom_rate,
        })
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Relative to robot heading.
    pub bearing: f64,
    pub distance: f64,
    pub phantom: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub timestamp: f64,
    pub max_range: f64,
    pub ranges: Vec<Beam>,
}

impl LaserScan {
    pub fn empty(timestamp: f64, max_range: f64) -> Self {
        LaserScan {
            timestamp,
            max_range,
            ranges: Vec::new(),
        }
    }
}

/// Cells crossed by a ray, with the ray parameter at which each is entered.
pub(crate) struct RayWalk<'a> {
    grid: &'a OccupancyGrid,
    cell: Cell,
    step: (i32, i32),
    t_max: (f64, f64),
    t_delta: (f64, f64),
    t: f64,
    limit: f64,
    done: bool,
}

impl<'a> RayWalk<'a> {
    pub(crate) fn new(grid: &'a OccupancyGrid, x: f64, y: f64, angle: f64, limit: f64) -> Self {
        let res = grid.resolution();
        let (dx, dy) = (angle.cos(), angle.sin());
        let cell = Cell::new((x / res).floor() as i32, (y / res).floor() as i32);
        let axis = |p: f64, d: f64, c: i32| -> (i32, f64, f64) {
            if d > 0.0 {
                (1, ((c + 1) as f64 * res - p) / d, res / d)
            } else if d < 0.0 {
                (-1, (c as f64 * res - p) / d, -res / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, tmx, tdx) = axis(x, dx, cell.x);
        let (sy, tmy, tdy) = axis(y, dy, cell.y);
        RayWalk {
            grid,
            cell,
            step: (sx, sy),
            t_max: (tmx, tmy),
            t_delta: (tdx, tdy),
            t: 0.0,
            limit,
            done: false,
        }
    }
}

impl Iterator for RayWalk<'_> {
    /// (cell, entry distance)
    type Item = (Cell, f64);

    fn next(&mut self) -> Option<(Cell, f64)> {
        if self.done || self.t > self.limit || !self.grid.contains(self.cell) {
            self.done = true;
            return None;
        }
        let out = (self.cell, self.t);
        if self.t_max.0 < self.t_max.1 {
            self.t = self.t_max.0;
            self.t_max.0 += self.t_delta.0;
            self.cell.x += self.step.0;
        } else {
            self.t = self.t_max.1;
            self.t_max.1 += self.t_delta.1;
            self.cell.y += self.step.1;
        }
        Some(out)
    }
}

/// Exact distance along the ray to the first occupied cell, capped at `max_range`.
pub fn cast_ray(grid: &OccupancyGrid, x: f64, y: f64, angle: f64, max_range: f64) -> f64 {
    for (cell, t) in RayWalk::new(grid, x, y, angle, max_range) {
        if grid.is_occupied(cell) {
            return t.min(max_range);
        }
    }
    max_range
}

/// Ray-casts every beam against the true grid and, while `noise` is active,
/// independently shortens each beam with probability `phantom_rate` to a
/// uniform distance in `[0, true distance)`.
pub fn sense<R: Rng + ?Sized>(
    grid: &OccupancyGrid,
    state: &RobotState,
    config: &LaserConfig,
    noise: Option<&NoiseSchedule>,
    t: f64,
    rng: &mut R,
) -> LaserScan {
    let active = noise.filter(|n| n.is_active(t));
    let ranges = config
        .bearings()
        .map(|bearing| {
            let truth = cast_ray(grid, state.x, state.y, state.heading + bearing, config.max_range);
            match active {
                Some(n) if rng.random::<f64>() < n.phantom_rate => Beam {
                    bearing,
                    distance: rng.random::<f64>() * truth,
                    phantom: true,
                },
                _ => Beam {
                    bearing,
                    distance: truth,
                    phantom: false,
                },
            }
        })
        .collect();
    LaserScan {
        timestamp: t,
        max_range: config.max_range,
        ranges,
    }
}
