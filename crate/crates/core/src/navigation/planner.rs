use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::world::{Cell, OccupancyGrid};

/// Expansion order: E, NE, N, NW, W, SW, S, SE. Fixes tie-breaking.
pub const NEIGHBORS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Path cost as a count of straight and diagonal steps. Two different counts
/// never share a real value, so comparing counts is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OctileCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl OctileCost {
    pub fn step(dx: i32, dy: i32) -> OctileCost {
        if dx != 0 && dy != 0 {
            OctileCost { straight: 0, diagonal: 1 }
        } else {
            OctileCost { straight: 1, diagonal: 0 }
        }
    }

    /// Cost in cell units.
    pub fn units(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn meters(self, resolution: f64) -> f64 {
        self.straight as f64 * resolution + self.diagonal as f64 * resolution * SQRT_2
    }

    pub fn plus(self, o: OctileCost) -> OctileCost {
        OctileCost {
            straight: self.straight + o.straight,
            diagonal: self.diagonal + o.diagonal,
        }
    }
}

/// Octile distance in cell units; admissible and consistent for 8-connected moves.
fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.x - b.x).unsigned_abs() as f64;
    let dy = (a.y - b.y).unsigned_abs() as f64;
    dx.max(dy) - dx.min(dy) + dx.min(dy) * SQRT_2
}

/// A move is legal when the target is free and, for diagonals, neither
/// orthogonal neighbour is occupied (no corner cutting).
pub fn can_move(grid: &OccupancyGrid, from: Cell, dx: i32, dy: i32) -> bool {
    let to = from.offset(dx, dy);
    if !grid.is_free(to) {
        return false;
    }
    if dx != 0 && dy != 0 {
        grid.is_free(from.offset(dx, 0)) && grid.is_free(from.offset(0, dy))
    } else {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Cell>,
    pub cost: OctileCost,
    pub resolution: f64,
}

impl Path {
    pub fn total_length(&self) -> f64 {
        self.cost.meters(self.resolution)
    }

    pub fn start(&self) -> Cell {
        self.waypoints[0]
    }

    pub fn goal(&self) -> Cell {
        *self.waypoints.last().expect("path is never empty")
    }

    pub fn center(&self, i: usize) -> (f64, f64) {
        let c = self.waypoints[i];
        (
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    fn from_cells(waypoints: Vec<Cell>, resolution: f64) -> Path {
        let cost = waypoints
            .windows(2)
            .fold(OctileCost::default(), |acc, w| {
                acc.plus(OctileCost::step(w[1].x - w[0].x, w[1].y - w[0].y))
            });
        Path {
            waypoints,
            cost,
            resolution,
        }
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    seq: u64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // Min-heap on (f, h, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost-optimal 8-connected path with octile A*.
pub fn plan(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Path> {
    for c in [start, goal] {
        if !grid.is_free(c) {
            return Err(Error::CellNotFree(c));
        }
    }
    let n = grid.len();
    let mut g: Vec<Option<OctileCost>> = vec![None; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let si = grid.index(start).expect("start in grid");
    let gi = grid.index(goal).expect("goal in grid");
    g[si] = Some(OctileCost::default());
    let mut seq = 0u64;
    let h0 = octile(start, goal);
    heap.push(Open {
        f: h0,
        h: h0,
        seq,
        index: si,
    });

    while let Some(Open { index, .. }) = heap.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == gi {
            let mut cells = vec![goal];
            let mut i = gi;
            while i != si {
                i = parent[i];
                cells.push(grid.cell_of_index(i));
            }
            cells.reverse();
            return Ok(Path::from_cells(cells, grid.resolution()));
        }
        let cell = grid.cell_of_index(index);
        let base = g[index].expect("closed cells have a cost");
        for &(dx, dy) in &NEIGHBORS {
            if !can_move(grid, cell, dx, dy) {
                continue;
            }
            let next = cell.offset(dx, dy);
            let ni = grid.index(next).expect("free cells are in grid");
            if closed[ni] {
                continue;
            }
            let cand = base.plus(OctileCost::step(dx, dy));
            if g[ni].is_none_or(|old| cand.units() < old.units()) {
                g[ni] = Some(cand);
                parent[ni] = index;
                seq += 1;
                let h = octile(next, goal);
                heap.push(Open {
                    f: cand.units() + h,
                    h,
                    seq,
                    index: ni,
                });
            }
        }
    }
    Err(Error::NoPath { start, goal })
}

/// Cost-to-go from every cell to one goal (Dijkstra outward from the goal).
/// Lets the expert extract an optimal path from any pose without re-searching.
#[derive(Debug, Clone)]
pub struct CostField {
    goal: Cell,
    costs: Vec<Option<OctileCost>>,
}

impl CostField {
    pub fn build(grid: &OccupancyGrid, goal: Cell) -> Result<CostField> {
        if !grid.is_free(goal) {
            return Err(Error::CellNotFree(goal));
        }
        let mut costs: Vec<Option<OctileCost>> = vec![None; grid.len()];
        let mut done = vec![false; grid.len()];
        let gi = grid.index(goal).expect("goal in grid");
        costs[gi] = Some(OctileCost::default());
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Open {
            f: 0.0,
            h: 0.0,
            seq,
            index: gi,
        });
        while let Some(Open { index, .. }) = heap.pop() {
            if done[index] {
                continue;
            }
            done[index] = true;
            let cell = grid.cell_of_index(index);
            let base = costs[index].expect("settled cells have a cost");
            for &(dx, dy) in &NEIGHBORS {
                if !can_move(grid, cell, dx, dy) {
                    continue;
                }
                let ni = grid.index(cell.offset(dx, dy)).expect("free cells are in grid");
                let cand = base.plus(OctileCost::step(dx, dy));
                if !done[ni] && costs[ni].is_none_or(|old| cand.units() < old.units()) {
                    costs[ni] = Some(cand);
                    seq += 1;
                    heap.push(Open {
                        f: cand.units(),
                        h: 0.0,
                        seq,
                        index: ni,
                    });
                }
            }
        }
        Ok(CostField { goal, costs })
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn cost(&self, grid: &OccupancyGrid, c: Cell) -> Option<OctileCost> {
        grid.index(c).and_then(|i| self.costs[i])
    }

    /// Optimal path by steepest descent. `grid` must be the grid the field was
    /// built on. A start cell that is itself blocked may still leave through
    /// any legal move into the field.
    pub fn path_from(&self, grid: &OccupancyGrid, start: Cell) -> Option<Path> {
        let mut cells = vec![start];
        let mut cur = start;
        if self.cost(grid, start).is_none() {
            let mut best: Option<(OctileCost, Cell)> = None;
            for &(dx, dy) in &NEIGHBORS {
                let n = start.offset(dx, dy);
                if !can_move(grid, start, dx, dy) {
                    continue;
                }
                if let Some(c) = self.cost(grid, n) {
                    let total = c.plus(OctileCost::step(dx, dy));
                    if best.is_none_or(|(b, _)| total.units() < b.units()) {
                        best = Some((total, n));
                    }
                }
            }
            let (_, n) = best?;
            cells.push(n);
            cur = n;
        }
        while cur != self.goal {
            let here = self.cost(grid, cur)?;
            let next = NEIGHBORS.iter().find_map(|&(dx, dy)| {
                if !can_move(grid, cur, dx, dy) {
                    return None;
                }
                let n = cur.offset(dx, dy);
                let c = self.cost(grid, n)?;
                (c.plus(OctileCost::step(dx, dy)) == here).then_some(n)
            })?;
            cells.push(next);
            cur = next;
        }
        Some(Path::from_cells(cells, grid.resolution()))
    }
}
