use std::fmt;

use serde::{Deserialize, Serialize};

/// Board coordinate. `x` grows east, `y` grows south, `(0, 0)` is the top left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: u32,
    pub y: u32,
}

impl Position {
    pub const fn new(x: u32, y: u32) -> Self {
        Position { x, y }
    }

    /// The neighbouring coordinate in `dir`, if it stays on a `width` x `height` board.
    pub fn step(self, dir: Direction, width: u32, height: u32) -> Option<Position> {
        let (dx, dy) = dir.delta();
        let x = self.x as i64 + dx as i64;
        let y = self.y as i64 + dy as i64;
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            None
        } else {
            Some(Position::new(x as u32, y as u32))
        }
    }

    pub fn manhattan(self, other: Position) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Row-major sort key.
    pub fn row_major(self) -> (u32, u32) {
        (self.y, self.x)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
    Center,
}

impl Direction {
    /// Move order used by the action layouts.
    pub const ALL: [Direction; 5] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
        Direction::Center,
    ];
    pub const CARDINALS: [Direction; 4] =
        [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
            Direction::Center => (0, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_cardinal(self) -> bool {
        self != Direction::Center
    }

    pub fn code(self) -> char {
        match self {
            Direction::North => 'n',
            Direction::East => 'e',
            Direction::South => 's',
            Direction::West => 'w',
            Direction::Center => 'c',
        }
    }

    pub fn from_code(code: &str) -> Option<Direction> {
        match code {
            "n" => Some(Direction::North),
            "e" => Some(Direction::East),
            "s" => Some(Direction::South),
            "w" => Some(Direction::West),
            "c" => Some(Direction::Center),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_respect_bounds() {
        let p = Position::new(0, 0);
        assert_eq!(p.step(Direction::North, 12, 12), None);
        assert_eq!(p.step(Direction::West, 12, 12), None);
        assert_eq!(p.step(Direction::East, 12, 12), Some(Position::new(1, 0)));
        assert_eq!(p.step(Direction::South, 12, 12), Some(Position::new(0, 1)));
        assert_eq!(Position::new(11, 11).step(Direction::East, 12, 12), None);
        assert_eq!(p.step(Direction::Center, 12, 12), Some(p));
    }
}
