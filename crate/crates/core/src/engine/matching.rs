use std::collections::BTreeSet;

use super::board::{Board, Direction, JokerKind, Move, Pos, Tile};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
    /// Horizontal and vertical runs sharing at least one cell (L, T, +).
    Cross,
}

/// A maximal set of same-colored cells connected through runs of three or more.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchGroup {
    /// Sorted row-major, no duplicates.
    pub cells: Vec<Pos>,
    pub orientation: Orientation,
    pub color: u8,
    /// Longest straight run inside the group.
    pub longest_run: usize,
    /// Cell a joker is placed on when no swapped cell belongs to the group.
    pub pivot: Pos,
}

impl MatchGroup {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, p: Pos) -> bool {
        self.cells.binary_search(&p).is_ok()
    }
}

struct Run {
    cells: Vec<Pos>,
    horizontal: bool,
}

fn scan_runs(board: &Board) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut scan = |outer: usize, inner: usize, at: &dyn Fn(usize, usize) -> Pos, horizontal| {
        for o in 0..outer {
            let mut i = 0;
            while i < inner {
                let Some(color) = board.get(at(o, i)).color() else {
                    i += 1;
                    continue;
                };
                let mut end = i + 1;
                while end < inner && board.get(at(o, end)) == Tile::Color(color) {
                    end += 1;
                }
                if end - i >= 3 {
                    runs.push(Run {
                        cells: (i..end).map(|k| at(o, k)).collect(),
                        horizontal,
                    });
                }
                i = end;
            }
        }
    };
    scan(board.rows(), board.cols(), &|r, c| Pos::new(r, c), true);
    scan(board.cols(), board.rows(), &|c, r| Pos::new(r, c), false);
    runs
}

fn find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// All maximal runs of three or more equal colors; runs sharing a cell are
/// merged into one cross group. Blockers, jokers and empty cells never match.
pub fn find_matches(board: &Board) -> Vec<MatchGroup> {
    let runs = scan_runs(board);
    if runs.is_empty() {
        return Vec::new();
    }

    let n_cells = board.rows() * board.cols();
    let mut parent: Vec<usize> = (0..runs.len()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; n_cells];
    for (ri, run) in runs.iter().enumerate() {
        for &p in &run.cells {
            let i = board.index(p);
            match owner[i] {
                Some(other) => {
                    let (a, b) = (find_root(&mut parent, ri), find_root(&mut parent, other));
                    if a != b {
                        parent[a] = b;
                    }
                }
                None => owner[i] = Some(ri),
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); runs.len()];
    for ri in 0..runs.len() {
        let root = find_root(&mut parent, ri);
        members[root].push(ri);
    }

    let mut groups: Vec<MatchGroup> = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let cells: BTreeSet<Pos> = m.iter().flat_map(|&ri| runs[ri].cells.iter().copied()).collect();
            let cells: Vec<Pos> = cells.into_iter().collect();
            let has_h = m.iter().any(|&ri| runs[ri].horizontal);
            let has_v = m.iter().any(|&ri| !runs[ri].horizontal);
            let orientation = match (has_h, has_v) {
                (true, true) => Orientation::Cross,
                (true, false) => Orientation::Horizontal,
                _ => Orientation::Vertical,
            };
            let longest_run = m.iter().map(|&ri| runs[ri].cells.len()).max().unwrap_or(0);
            let pivot = if orientation == Orientation::Cross {
                let in_dir = |p: &Pos, horizontal: bool| {
                    m.iter()
                        .any(|&ri| runs[ri].horizontal == horizontal && runs[ri].cells.contains(p))
                };
                *cells
                    .iter()
                    .find(|p| in_dir(p, true) && in_dir(p, false))
                    .unwrap_or(&cells[cells.len() / 2])
            } else {
                cells[cells.len() / 2]
            };
            let color = board.get(cells[0]).color().unwrap_or(0);
            MatchGroup {
                cells,
                orientation,
                color,
                longest_run,
                pivot,
            }
        })
        .collect();
    groups.sort_by_key(|g| g.cells[0]);
    groups
}

/// Joker left behind by a group: a straight five or longer makes a color
/// bomb, any cross makes a wrapped joker, a straight four makes a striped
/// joker along the match axis.
pub fn joker_for_group(group: &MatchGroup) -> Option<JokerKind> {
    if group.longest_run >= 5 {
        return Some(JokerKind::ColorBomb);
    }
    match group.orientation {
        Orientation::Cross => Some(JokerKind::Wrapped),
        Orientation::Horizontal if group.longest_run == 4 => Some(JokerKind::StripedRow),
        Orientation::Vertical if group.longest_run == 4 => Some(JokerKind::StripedCol),
        _ => None,
    }
}

/// Every move whose source and target are playable cells on the board.
pub fn enumerate_positional_swaps(board: &Board) -> Vec<Move> {
    board
        .positions()
        .flat_map(|p| Direction::ALL.into_iter().map(move |d| Move { pos: p, dir: d }))
        .filter(|&mv| board.is_positionally_legal(mv))
        .collect()
}

// Would `at` hold a run of three after swapping `a` and `b`?
fn run_after_swap(board: &Board, a: Pos, b: Pos, at: Pos) -> bool {
    let view = |q: Pos| {
        if q == a {
            board.get(b)
        } else if q == b {
            board.get(a)
        } else {
            board.get(q)
        }
    };
    let Some(color) = view(at).color() else {
        return false;
    };
    let same = |r: isize, c: isize| r >= 0 && c >= 0 && view(Pos::new(r as usize, c as usize)) == Tile::Color(color);
    let (r0, c0) = (at.row as isize, at.col as isize);
    for (dr, dc) in [(0isize, 1isize), (1, 0)] {
        let mut len = 1;
        let mut k = 1;
        while same(r0 + dr * k, c0 + dc * k) {
            len += 1;
            k += 1;
        }
        k = 1;
        while same(r0 - dr * k, c0 - dc * k) {
            len += 1;
            k += 1;
        }
        if len >= 3 {
            return true;
        }
    }
    false
}

/// True when the swap creates a match or activates a joker.
///
/// Assumes the board is resolved (no standing matches), which every public
/// engine operation guarantees.
pub fn is_valid_move(board: &Board, mv: Move) -> Result<bool> {
    let target = board.legal_target(mv)?;
    let (ta, tb) = (board.get(mv.pos), board.get(target));
    if !ta.is_movable() || !tb.is_movable() {
        return Ok(false);
    }
    if matches!(ta, Tile::Joker(_)) || matches!(tb, Tile::Joker(_)) {
        return Ok(true);
    }
    if ta == tb {
        return Ok(false);
    }
    Ok(run_after_swap(board, mv.pos, target, mv.pos) || run_after_swap(board, mv.pos, target, target))
}

pub fn valid_moves(board: &Board) -> Vec<Move> {
    enumerate_positional_swaps(board)
        .into_iter()
        .filter(|&mv| is_valid_move(board, mv).unwrap_or(false))
        .collect()
}

pub fn has_valid_move(board: &Board) -> bool {
    enumerate_positional_swaps(board)
        .into_iter()
        .any(|mv| is_valid_move(board, mv).unwrap_or(false))
}

/// Best joker the move's immediate matches would create. Joker activations
/// and invalid moves create none.
pub fn creates_joker(board: &Board, mv: Move) -> Result<Option<JokerKind>> {
    let target = board.legal_target(mv)?;
    if !is_valid_move(board, mv)? {
        return Ok(None);
    }
    if matches!(board.get(mv.pos), Tile::Joker(_)) || matches!(board.get(target), Tile::Joker(_)) {
        return Ok(None);
    }
    let mut swapped = board.clone();
    swapped.swap(mv.pos, target);
    Ok(find_matches(&swapped)
        .iter()
        .filter_map(joker_for_group)
        .max_by_key(|j| j.rank()))
}
