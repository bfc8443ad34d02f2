use std::fmt;

use serde::{Deserialize, Serialize};

/// Grid cell index. `x` grows east, `y` grows north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Free,
    Occupied,
}

/// Row-major occupancy grid; cell `(x, y)` covers
/// `[x*res, (x+1)*res) x [y*res, (y+1)*res)` in world meters.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<Occupancy>,
}

impl OccupancyGrid {
    /// All-free grid.
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        assert!(resolution > 0.0, "resolution must be positive");
        OccupancyGrid {
            width,
            height,
            resolution,
            cells: vec![Occupancy::Free; width * height],
        }
    }

    /// All-free grid with an occupied one-cell border.
    pub fn walled(width: usize, height: usize, resolution: f64) -> Self {
        let mut g = Self::new(width, height, resolution);
        for x in 0..width as i32 {
            g.set(Cell::new(x, 0), Occupancy::Occupied);
            g.set(Cell::new(x, height as i32 - 1), Occupancy::Occupied);
        }
        for y in 0..height as i32 {
            g.set(Cell::new(0, y), Occupancy::Occupied);
            g.set(Cell::new(width as i32 - 1, y), Occupancy::Occupied);
        }
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    pub fn get(&self, c: Cell) -> Option<Occupancy> {
        self.index(c).map(|i| self.cells[i])
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == Some(Occupancy::Free)
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.is_free(c)
    }

    pub fn set(&mut self, c: Cell, value: Occupancy) {
        let i = self
            .index(c)
            .unwrap_or_else(|| panic!("cell {c} outside {}x{} grid", self.width, self.height));
        self.cells[i] = value;
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    pub fn occupied_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|&&c| c == Occupancy::Occupied)
            .count()
    }

    /// Cell containing the world point, if inside the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let c = Cell::new(
            (x / self.resolution).floor() as i32,
            (y / self.resolution).floor() as i32,
        );
        self.contains(c).then_some(c)
    }

    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn borders_occupied(&self) -> bool {
        let (w, h) = (self.width as i32, self.height as i32);
        (0..w).all(|x| self.is_occupied(Cell::new(x, 0)) && self.is_occupied(Cell::new(x, h - 1)))
            && (0..h)
                .all(|y| self.is_occupied(Cell::new(0, y)) && self.is_occupied(Cell::new(w - 1, y)))
    }

    /// Copy with every occupied cell grown by `radius` cells (Chebyshev).
    /// Cells listed in `keep` stay as they are in `self`.
    pub fn inflated(&self, radius: i32, keep: &[Cell]) -> OccupancyGrid {
        let mut out = self.clone();
        if radius <= 0 {
            return out;
        }
        for i in 0..self.cells.len() {
            if self.cells[i] != Occupancy::Occupied {
                continue;
            }
            let c = self.cell_of_index(i);
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let n = c.offset(dx, dy);
                    if let Some(j) = out.index(n) {
                        out.cells[j] = Occupancy::Occupied;
                    }
                }
            }
        }
        for &k in keep {
            if let Some(v) = self.get(k) {
                out.set(k, v);
            }
        }
        out
    }
}
