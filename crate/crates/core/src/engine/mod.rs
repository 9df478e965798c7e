//! Deterministic match-3 board mechanics.
//!
//! A [`Board`] is an `m x n` grid (3 ≤ m, n ≤ 9) of [`Tile`]s with a
//! playable mask. Moves swap two orthogonal neighbours; a swap is valid when
//! it produces a horizontal or vertical run of three or more equal colors, or
//! when it involves a joker. Valid moves are resolved to a fixpoint: matched
//! cells clear, larger matches leave jokers behind, adjacent blockers break,
//! tiles fall and empty cells are refilled from the supplied random stream.

mod board;
mod cascade;
mod generate;
mod matching;

pub use board::{Board, CellKind, Direction, JokerKind, Move, Pos, Tile};
pub use cascade::{apply_gravity, apply_move, CascadeOutcome, MoveOutcome};
pub use generate::{ensure_playable, generate_board, zero_pad, MAX_RESHUFFLES};
pub use matching::{
    creates_joker, enumerate_positional_swaps, find_matches, has_valid_move, is_valid_move, joker_for_group,
    valid_moves, MatchGroup, Orientation,
};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 3;
pub const MAX_DIM: usize = 9;
pub const NUM_COLORS: u8 = 6;

pub(crate) fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&rows) || !(MIN_DIM..=MAX_DIM).contains(&cols) {
        return Err(Error::Dimension(format!("{rows}x{cols} outside {MIN_DIM}..={MAX_DIM}")));
    }
    Ok(())
}

/// Number of directed neighbour swaps on a full `rows x cols` lattice:
/// `2(2mn - m - n)`.
pub fn theoretical_move_count(rows: usize, cols: usize) -> Result<usize> {
    check_dims(rows, cols)?;
    Ok(2 * (2 * rows * cols - rows - cols))
}

/// Number of cells whose tiles differ.
pub fn hamming_distance(a: &Board, b: &Board) -> Result<usize> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(a.tiles().iter().zip(b.tiles()).filter(|(x, y)| x != y).count())
}

#[cfg(test)]
pub(crate) fn cascade_test_rng(palette: u8, colors: &[u8]) -> cascade::tests::ScriptRng {
    cascade::tests::ScriptRng::colors(palette, colors)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Corner/edge/interior counting, independent of the closed form.
    fn count_by_neighbours(m: usize, n: usize) -> usize {
        let mut total = 0;
        for r in 0..m {
            for c in 0..n {
                let up = r > 0;
                let down = r + 1 < m;
                let left = c > 0;
                let right = c + 1 < n;
                total += [up, down, left, right].iter().filter(|&&b| b).count();
            }
        }
        total
    }

    #[test]
    fn move_count_examples() {
        assert_eq!(theoretical_move_count(9, 9).unwrap(), 288);
        assert_eq!(theoretical_move_count(3, 3).unwrap(), 24);
        assert_eq!(theoretical_move_count(3, 9).unwrap(), 84);
        assert_eq!(count_by_neighbours(3, 3), 24);
        assert_eq!(count_by_neighbours(3, 9), 84);
    }

    #[test]
    fn move_count_matches_per_tile_sum() {
        for m in MIN_DIM..=MAX_DIM {
            for n in MIN_DIM..=MAX_DIM {
                let corners = 4;
                let edges = 2 * (n - 2) + 2 * (m - 2);
                let interior = (n - 2) * (m - 2);
                let n_moves = theoretical_move_count(m, n).unwrap();
                assert_eq!(n_moves, 4 * interior + 3 * edges + 2 * corners);
                assert_eq!(n_moves, count_by_neighbours(m, n));
                assert_eq!(n_moves % 2, 0);
            }
        }
    }

    #[test]
    fn move_count_rejects_bad_dims() {
        assert!(matches!(theoretical_move_count(2, 5), Err(Error::Dimension(_))));
        assert!(matches!(theoretical_move_count(5, 10), Err(Error::Dimension(_))));
    }

    #[test]
    fn hamming_examples() {
        let a = Board::parse(&["123", "456", "123"]).unwrap();
        let b = Board::parse(&["123", "451", "123"]).unwrap();
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 1);

        let x = Board::filled(9, 9, Tile::Color(1)).unwrap();
        let y = Board::filled(9, 9, Tile::Color(2)).unwrap();
        assert_eq!(hamming_distance(&x, &y).unwrap(), 81);

        let small = Board::filled(3, 4, Tile::Color(1)).unwrap();
        assert!(matches!(hamming_distance(&a, &small), Err(Error::Dimension(_))));
    }
}
