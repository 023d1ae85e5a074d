//! Tile grids and cell coordinates shared by the level model and simulator.

use serde::{Deserialize, Serialize};

/// Maximum room height in rows.
pub const MAX_ROOM_ROWS: usize = 15;
/// Maximum room width in columns.
pub const MAX_ROOM_COLS: usize = 20;

/// A single tile of room terrain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Empty,
    Solid,
    /// Horizontal platform the player can rise through but never descend
    /// through. Objects ignore ledges entirely.
    Ledge,
}

impl Tile {
    pub fn to_char(self) -> char {
        match self {
            Tile::Empty => '.',
            Tile::Solid => '#',
            Tile::Ledge => '^',
        }
    }

    pub fn from_char(c: char) -> Option<Tile> {
        match c {
            '.' | ' ' => Some(Tile::Empty),
            '#' => Some(Tile::Solid),
            '^' => Some(Tile::Ledge),
            _ => None,
        }
    }
}

/// Grid cell addressed as (col, row) with row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: i32,
    pub row: i32,
}

impl Cell {
    pub const fn new(col: i32, row: i32) -> Cell {
        Cell { col, row }
    }

    pub fn shifted(self, dc: i32, dr: i32) -> Cell {
        Cell::new(self.col + dc, self.row + dr)
    }

    /// Cell directly above (smaller row index).
    pub fn above(self) -> Cell {
        self.shifted(0, -1)
    }

    /// Cell directly below (larger row index).
    pub fn below(self) -> Cell {
        self.shifted(0, 1)
    }
}

/// Horizontal facing / movement direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    Left,
    Right,
}

impl Dir {
    pub fn dx(self) -> i32 {
        match self {
            Dir::Left => -1,
            Dir::Right => 1,
        }
    }
}

/// Dense row-major tile grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
}

impl Grid {
    pub fn filled(width: usize, height: usize, tile: Tile) -> Grid {
        Grid {
            width,
            height,
            tiles: vec![tile; width * height],
        }
    }

    /// Parses rows of `#`, `.`, `^`. All rows must have equal length.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Option<Grid> {
        let height = rows.len();
        let width = rows.first()?.as_ref().chars().count();
        let mut tiles = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.chars().count() != width {
                return None;
            }
            for c in row.chars() {
                tiles.push(Tile::from_char(c)?);
            }
        }
        Some(Grid {
            width,
            height,
            tiles,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.col >= 0
            && cell.row >= 0
            && (cell.col as usize) < self.width
            && (cell.row as usize) < self.height
    }

    /// Out-of-bounds cells read as Solid so the border always blocks.
    pub fn at(&self, cell: Cell) -> Tile {
        if !self.in_bounds(cell) {
            return Tile::Solid;
        }
        self.tiles[cell.row as usize * self.width + cell.col as usize]
    }

    pub fn set(&mut self, cell: Cell, tile: Tile) {
        assert!(self.in_bounds(cell), "cell {cell:?} out of bounds");
        self.tiles[cell.row as usize * self.width + cell.col as usize] = tile;
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| self.tiles[r * self.width + c].to_char())
                    .collect()
            })
            .collect()
    }
}
