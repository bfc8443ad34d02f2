use std::collections::BTreeMap;
use std::path::Path;

use super::grid::{Cell, Occupancy, OccupancyGrid};
use crate::error::{Error, Result};

/// Arena loaded from the plain-text grid format.
///
/// `#` is an occupied cell, `.` a free cell and `A`-`Z` a labelled free cell.
/// The first line is the northern-most row.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub grid: OccupancyGrid,
    pub labels: BTreeMap<char, Cell>,
}

impl MapFile {
    pub fn parse(text: &str, resolution: f64) -> Result<MapFile> {
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(&(_, first)) = rows.first() else {
            return Err(Error::MapParse {
                line: 1,
                reason: "map is empty".into(),
            });
        };
        let width = first.chars().count();
        let height = rows.len();
        let mut grid = OccupancyGrid::new(width, height, resolution);
        let mut labels = BTreeMap::new();
        for (row, &(line_no, line)) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::MapParse {
                    line: line_no,
                    reason: format!("expected {width} columns, found {}", line.chars().count()),
                });
            }
            let y = (height - 1 - row) as i32;
            for (x, ch) in line.chars().enumerate() {
                let cell = Cell::new(x as i32, y);
                match ch {
                    '#' => grid.set(cell, Occupancy::Occupied),
                    '.' => {}
                    'A'..='Z' => {
                        if labels.insert(ch, cell).is_some() {
                            return Err(Error::MapParse {
                                line: line_no,
                                reason: format!("duplicate label {ch}"),
                            });
                        }
                    }
                    other => {
                        return Err(Error::MapParse {
                            line: line_no,
                            reason: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
        }
        Ok(MapFile { grid, labels })
    }

    pub fn load(path: &Path, resolution: f64) -> Result<MapFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, resolution)
    }

    /// Rejects maps whose border is not fully occupied.
    pub fn require_closed(&self) -> Result<()> {
        if self.grid.borders_occupied() {
            Ok(())
        } else {
            Err(Error::InvalidMap("arena border must be fully occupied".into()))
        }
    }

    pub fn label(&self, name: char) -> Option<Cell> {
        self.labels.get(&name).copied()
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let by_cell: BTreeMap<Cell, char> = self.labels.iter().map(|(&k, &v)| (v, k)).collect();
        let mut out = String::with_capacity((g.width() + 1) * g.height());
        for y in (0..g.height() as i32).rev() {
            for x in 0..g.width() as i32 {
                let c = Cell::new(x, y);
                out.push(match by_cell.get(&c) {
                    Some(&l) => l,
                    None if g.is_occupied(c) => '#',
                    None => '.',
                });
            }
            out.push('\n');
        }
        out
    }
}
