use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_dims, NUM_COLORS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JokerKind {
    /// Clears its whole row.
    StripedRow,
    /// Clears its whole column.
    StripedCol,
    /// Clears the surrounding 3x3 block.
    Wrapped,
    /// Clears every tile of the color it is swapped with.
    ColorBomb,
}

impl JokerKind {
    /// Preference order used by the smart player: bomb > wrapped > striped.
    pub fn rank(self) -> u8 {
        match self {
            JokerKind::StripedRow | JokerKind::StripedCol => 1,
            JokerKind::Wrapped => 2,
            JokerKind::ColorBomb => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Tile {
    #[default]
    Empty,
    /// Color in `1..=6`.
    Color(u8),
    Blocker,
    Joker(JokerKind),
}

impl Tile {
    pub fn color(self) -> Option<u8> {
        match self {
            Tile::Color(c) => Some(c),
            _ => None,
        }
    }

    /// Colors and jokers can be swapped; blockers and empty cells cannot.
    pub fn is_movable(self) -> bool {
        matches!(self, Tile::Color(_) | Tile::Joker(_))
    }

    fn to_char(self) -> char {
        match self {
            Tile::Empty => '.',
            Tile::Color(c) => char::from(b'0' + c),
            Tile::Blocker => 'B',
            Tile::Joker(JokerKind::StripedRow) => '-',
            Tile::Joker(JokerKind::StripedCol) => '|',
            Tile::Joker(JokerKind::Wrapped) => 'W',
            Tile::Joker(JokerKind::ColorBomb) => '*',
        }
    }
}

/// Layout cell of a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Playable,
    Hole,
    Blocker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Swap direction. The declaration order is the action-encoding order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Right => (0, 1),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
        }
    }
}

/// A swap of `pos` with its neighbour in `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub pos: Pos,
    pub dir: Direction,
}

impl Move {
    pub const fn new(row: usize, col: usize, dir: Direction) -> Self {
        Move {
            pos: Pos::new(row, col),
            dir,
        }
    }

    /// Neighbour coordinates, ignoring board bounds except the zero edge.
    pub fn target(self) -> Option<Pos> {
        let (dr, dc) = self.dir.delta();
        let row = self.pos.row.checked_add_signed(dr)?;
        let col = self.pos.col.checked_add_signed(dc)?;
        Some(Pos::new(row, col))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.pos, self.dir)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Board {
    rows: usize,
    cols: usize,
    palette: u8,
    cells: Vec<Tile>,
    playable: Vec<bool>,
}

impl Board {
    /// Full rectangle with every cell set to `tile`.
    pub fn filled(rows: usize, cols: usize, tile: Tile) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Board {
            rows,
            cols,
            palette: NUM_COLORS,
            cells: vec![tile; rows * cols],
            playable: vec![true; rows * cols],
        })
    }

    /// Builds a board from text rows.
    ///
    /// `1`-`6` colors, `.` empty playable cell, `#` hole, `B` blocker,
    /// `-`/`|` striped row/column, `W` wrapped, `*` color bomb.
    pub fn parse(rows: &[&str]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        check_dims(n_rows, n_cols)?;
        let mut board = Board::filled(n_rows, n_cols, Tile::Empty)?;
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {r} has {} cells, expected {n_cols}",
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                let i = r * n_cols + c;
                board.cells[i] = match ch {
                    '1'..='6' => Tile::Color(ch as u8 - b'0'),
                    '.' => Tile::Empty,
                    '#' => {
                        board.playable[i] = false;
                        Tile::Empty
                    }
                    'B' => Tile::Blocker,
                    '-' => Tile::Joker(JokerKind::StripedRow),
                    '|' => Tile::Joker(JokerKind::StripedCol),
                    'W' => Tile::Joker(JokerKind::Wrapped),
                    '*' => Tile::Joker(JokerKind::ColorBomb),
                    other => {
                        return Err(Error::Dimension(format!(
                            "unknown tile character {other:?} at ({r},{c})"
                        )))
                    }
                };
            }
        }
        Ok(board)
    }

    /// Empty board over a level layout.
    pub fn from_layout(rows: usize, cols: usize, palette: u8, layout: &[CellKind]) -> Result<Self> {
        check_dims(rows, cols)?;
        if layout.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "layout has {} cells, expected {}",
                layout.len(),
                rows * cols
            )));
        }
        let mut board = Board::filled(rows, cols, Tile::Empty)?.with_palette(palette);
        for (i, kind) in layout.iter().enumerate() {
            match kind {
                CellKind::Playable => {}
                CellKind::Hole => board.playable[i] = false,
                CellKind::Blocker => board.cells[i] = Tile::Blocker,
            }
        }
        Ok(board)
    }

    /// Sets the number of colors used for refills (clamped to `2..=6`; a
    /// single color would refill into matches forever).
    pub fn with_palette(mut self, palette: u8) -> Self {
        self.palette = palette.clamp(2, NUM_COLORS);
        self
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, palette: u8, cells: Vec<Tile>, playable: Vec<bool>) -> Self {
        debug_assert_eq!(cells.len(), rows * cols);
        debug_assert_eq!(playable.len(), rows * cols);
        Board {
            rows,
            cols,
            palette,
            cells,
            playable,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn palette(&self) -> u8 {
        self.palette
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.cells
    }

    pub fn playable_mask(&self) -> &[bool] {
        &self.playable
    }

    pub fn playable_count(&self) -> usize {
        self.playable.iter().filter(|&&p| p).count()
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row < self.rows && p.col < self.cols
    }

    pub fn index(&self, p: Pos) -> usize {
        p.row * self.cols + p.col
    }

    pub fn pos_of(&self, i: usize) -> Pos {
        Pos::new(i / self.cols, i % self.cols)
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.rows * self.cols).map(|i| self.pos_of(i))
    }

    /// Out-of-bounds reads return `Empty`.
    pub fn get(&self, p: Pos) -> Tile {
        if self.in_bounds(p) {
            self.cells[self.index(p)]
        } else {
            Tile::Empty
        }
    }

    pub fn is_playable(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.playable[self.index(p)]
    }

    /// Writes a tile into a playable cell. Writes to holes are ignored so that
    /// non-playable cells always stay empty.
    pub fn set(&mut self, p: Pos, tile: Tile) {
        if self.is_playable(p) {
            let i = self.index(p);
            self.cells[i] = tile;
        }
    }

    pub fn swap(&mut self, a: Pos, b: Pos) {
        let (ia, ib) = (self.index(a), self.index(b));
        self.cells.swap(ia, ib);
    }

    /// Target cell of a positionally legal move.
    pub fn target_of(&self, mv: Move) -> Option<Pos> {
        let t = mv.target()?;
        (self.is_playable(mv.pos) && self.is_playable(t)).then_some(t)
    }

    pub fn is_positionally_legal(&self, mv: Move) -> bool {
        self.target_of(mv).is_some()
    }

    pub(crate) fn legal_target(&self, mv: Move) -> Result<Pos> {
        self.target_of(mv)
            .ok_or_else(|| Error::Move(format!("{mv} is positionally forbidden")))
    }

    pub fn count_colors(&self) -> [usize; NUM_COLORS as usize] {
        let mut counts = [0; NUM_COLORS as usize];
        for t in &self.cells {
            if let Tile::Color(c) = t {
                counts[*c as usize - 1] += 1;
            }
        }
        counts
    }

    pub fn count_blockers(&self) -> usize {
        self.cells.iter().filter(|t| **t == Tile::Blocker).count()
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = Pos::new(r, c);
                let ch = if self.is_playable(p) {
                    self.get(p).to_char()
                } else {
                    '#'
                };
                write!(f, "{ch}")?;
            }
            if r + 1 < self.rows {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_agree() {
        let rows = ["12B", "#W*", "-|3"];
        let b = Board::parse(&rows).unwrap();
        assert_eq!(b.to_string(), rows.join("\n"));
        assert!(!b.is_playable(Pos::new(1, 0)));
        assert_eq!(b.get(Pos::new(0, 2)), Tile::Blocker);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(Board::parse(&["123", "12", "123"]).is_err());
        assert!(Board::parse(&["12", "12"]).is_err());
    }

    #[test]
    fn holes_stay_empty() {
        let mut b = Board::parse(&["1#1", "111", "111"]).unwrap();
        b.set(Pos::new(0, 1), Tile::Color(3));
        assert_eq!(b.get(Pos::new(0, 1)), Tile::Empty);
    }

    #[test]
    fn move_targets() {
        let b = Board::filled(3, 3, Tile::Color(1)).unwrap();
        assert_eq!(b.target_of(Move::new(0, 0, Direction::Up)), None);
        assert_eq!(b.target_of(Move::new(0, 0, Direction::Left)), None);
        assert_eq!(b.target_of(Move::new(0, 0, Direction::Right)), Some(Pos::new(0, 1)));
        assert_eq!(b.target_of(Move::new(2, 2, Direction::Down)), None);
    }
}
