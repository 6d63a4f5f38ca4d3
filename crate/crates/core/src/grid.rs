//! Tile-colored gridworlds with deterministic 4-connected motion and the
//! eight safe/dangerous reward hypotheses over the three tile colors.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `(row, col)`, zero-based from the top-left corner.
pub type Cell = (usize, usize);

pub const GOAL_REWARD: f64 = 10.0;
pub const DANGER_REWARD: f64 = -2.0;
pub const NUM_HYPOTHESES: usize = 8;
pub const DEFAULT_DISCOUNT: f64 = 0.99;
pub const DEFAULT_MAX_STEPS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("row {row} has {found} cells, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown tile character {ch:?} at ({row}, {col})")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("grid has no start cell 'S'")]
    MissingStart,
    #[error("grid has more than one start cell 'S'")]
    DuplicateStart,
    #[error("grid has no goal cell 'G'")]
    MissingGoal,
    #[error("grid has more than one goal cell 'G'")]
    DuplicateGoal,
    #[error("discount must lie in (0, 1], got {0}")]
    BadDiscount(f64),
    #[error("max_steps must be positive")]
    BadMaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TileKind {
    Orange,
    Purple,
    Cyan,
    Neutral,
    Wall,
    Goal,
}

impl TileKind {
    pub const COLORS: [TileKind; 3] = [TileKind::Orange, TileKind::Purple, TileKind::Cyan];

    /// Bit position of a colored tile inside a hypothesis index.
    pub fn color_bit(self) -> Option<u8> {
        match self {
            TileKind::Orange => Some(0),
            TileKind::Purple => Some(1),
            TileKind::Cyan => Some(2),
            _ => None,
        }
    }

    fn from_char(ch: char) -> Option<Self> {
        Some(match ch {
            'S' | '.' => TileKind::Neutral,
            'G' => TileKind::Goal,
            'o' => TileKind::Orange,
            'p' => TileKind::Purple,
            'c' => TileKind::Cyan,
            '#' => TileKind::Wall,
            _ => return None,
        })
    }

    fn to_char(self) -> char {
        match self {
            TileKind::Orange => 'o',
            TileKind::Purple => 'p',
            TileKind::Cyan => 'c',
            TileKind::Neutral => '.',
            TileKind::Wall => '#',
            TileKind::Goal => 'G',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "N")]
    North,
    #[serde(rename = "S")]
    South,
    #[serde(rename = "E")]
    East,
    #[serde(rename = "W")]
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::North => (-1, 0),
            Action::South => (1, 0),
            Action::East => (0, 1),
            Action::West => (0, -1),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::North => "N",
            Action::South => "S",
            Action::East => "E",
            Action::West => "W",
        };
        f.write_str(s)
    }
}

/// One of the `2^3` assignments of safe (0) / dangerous (-2) to the three
/// tile colors. Bit `b` of the index is set when color `b` is dangerous
/// (orange = bit 0, purple = bit 1, cyan = bit 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RewardHypothesis(u8);

impl RewardHypothesis {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_HYPOTHESES).then_some(Self(index as u8))
    }

    pub fn all() -> impl Iterator<Item = RewardHypothesis> {
        (0..NUM_HYPOTHESES as u8).map(RewardHypothesis)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_dangerous(self, color: TileKind) -> bool {
        color.color_bit().is_some_and(|b| self.0 >> b & 1 == 1)
    }

    /// Value of entering a tile of the given kind.
    pub fn tile_value(self, kind: TileKind) -> f64 {
        match kind {
            TileKind::Goal => GOAL_REWARD,
            TileKind::Neutral | TileKind::Wall => 0.0,
            color if self.is_dangerous(color) => DANGER_REWARD,
            _ => 0.0,
        }
    }

    /// `(orange, purple, cyan)` tile values.
    pub fn color_values(self) -> [f64; 3] {
        TileKind::COLORS.map(|c| self.tile_value(c))
    }
}

impl fmt::Display for RewardHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |c: TileKind| if self.is_dangerous(c) { 'X' } else { '-' };
        write!(
            f,
            "r{}[o{} p{} c{}]",
            self.0,
            tag(TileKind::Orange),
            tag(TileKind::Purple),
            tag(TileKind::Cyan)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    id: String,
    width: usize,
    height: usize,
    tiles: Vec<TileKind>,
    start: Cell,
    goal: Cell,
    discount: f64,
    max_steps: usize,
}

impl GridWorld {
    /// Parses the ASCII grid format: one character per cell, one row per line.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(GridError::Empty);
        }
        let width = rows[0].chars().count();
        let mut tiles = Vec::with_capacity(width * rows.len());
        let mut start = None;
        let mut goal = None;
        for (row, line) in rows.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(GridError::NonRectangular {
                    row,
                    expected: width,
                    found,
                });
            }
            for (col, ch) in line.chars().enumerate() {
                let kind = TileKind::from_char(ch).ok_or(GridError::UnknownChar { ch, row, col })?;
                match ch {
                    'S' if start.replace((row, col)).is_some() => {
                        return Err(GridError::DuplicateStart)
                    }
                    'G' if goal.replace((row, col)).is_some() => {
                        return Err(GridError::DuplicateGoal)
                    }
                    _ => {}
                }
                tiles.push(kind);
            }
        }
        Ok(Self {
            id: String::new(),
            width,
            height: rows.len(),
            tiles,
            start: start.ok_or(GridError::MissingStart)?,
            goal: goal.ok_or(GridError::MissingGoal)?,
            discount: DEFAULT_DISCOUNT,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self, GridError> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(GridError::BadDiscount(discount));
        }
        self.discount = discount;
        Ok(self)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self, GridError> {
        if max_steps == 0 {
            return Err(GridError::BadMaxSteps);
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn start(&self) -> Cell {
        self.start
    }
    pub fn goal(&self) -> Cell {
        self.goal
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }
    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn num_cells(&self) -> usize {
        self.tiles.len()
    }

    pub fn index_of(&self, (row, col): Cell) -> usize {
        row * self.width + col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        (index / self.width, index % self.width)
    }

    pub fn in_bounds(&self, (row, col): Cell) -> bool {
        row < self.height && col < self.width
    }

    pub fn tile(&self, cell: Cell) -> TileKind {
        self.tiles[self.index_of(cell)]
    }

    /// Every in-bounds, non-wall cell in row-major order.
    pub fn open_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells())
            .map(|i| self.cell_at(i))
            .filter(|&c| self.tile(c) != TileKind::Wall)
    }

    pub fn is_open(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && self.tile(cell) != TileKind::Wall
    }

    /// Deterministic move; bumping into a wall or the border stays in place.
    pub fn step(&self, cell: Cell, action: Action) -> (Cell, bool) {
        let (dr, dc) = action.delta();
        let next = match (cell.0.checked_add_signed(dr), cell.1.checked_add_signed(dc)) {
            (Some(r), Some(c)) if self.is_open((r, c)) => (r, c),
            _ => cell,
        };
        (next, next == self.goal)
    }

    /// Reward for the transition `cell --action--> next`: the value of the
    /// tile entered (a bump re-enters the current tile).
    pub fn reward_of(
        &self,
        hypothesis: RewardHypothesis,
        _cell: Cell,
        _action: Action,
        next: Cell,
    ) -> f64 {
        hypothesis.tile_value(self.tile(next))
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                let ch = if (row, col) == self.start {
                    'S'
                } else {
                    self.tile((row, col)).to_char()
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_grid(text: &str) -> Result<GridWorld, GridError> {
    GridWorld::parse(text)
}
