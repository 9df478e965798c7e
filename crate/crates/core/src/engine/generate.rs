use rand::seq::SliceRandom;
use rand::Rng;

use super::board::{Board, CellKind, Pos, Tile};
use super::matching::{find_matches, has_valid_move};
use super::MAX_DIM;
use crate::error::{Error, Result};

pub const MAX_RESHUFFLES: usize = 1000;
const MAX_FILLS: usize = 100;

fn playable_and_stable(board: &Board) -> bool {
    find_matches(board).is_empty() && has_valid_move(board)
}

/// Returns the board unchanged when it is stable and has a valid move;
/// otherwise permutes its colored tiles (blockers, jokers and holes stay in
/// place) until it is, giving up after [`MAX_RESHUFFLES`] attempts.
pub fn ensure_playable<R: Rng + ?Sized>(board: &Board, rng: &mut R) -> Result<Board> {
    if playable_and_stable(board) {
        return Ok(board.clone());
    }
    let slots: Vec<Pos> = board.positions().filter(|&p| board.get(p).color().is_some()).collect();
    let mut colors: Vec<Tile> = slots.iter().map(|&p| board.get(p)).collect();
    let mut work = board.clone();
    for _ in 0..MAX_RESHUFFLES {
        colors.shuffle(rng);
        for (&p, &t) in slots.iter().zip(&colors) {
            work.set(p, t);
        }
        if playable_and_stable(&work) {
            return Ok(work);
        }
    }
    Err(Error::Unplayable {
        attempts: MAX_RESHUFFLES,
    })
}

fn completes_run(board: &Board, p: Pos, color: u8) -> bool {
    let c = Tile::Color(color);
    let left = p.col >= 2 && board.get(Pos::new(p.row, p.col - 1)) == c && board.get(Pos::new(p.row, p.col - 2)) == c;
    let up = p.row >= 2 && board.get(Pos::new(p.row - 1, p.col)) == c && board.get(Pos::new(p.row - 2, p.col)) == c;
    left || up
}

/// Fresh board over an optional layout: no standing matches and at least one
/// valid move. Cells that would complete a triple are re-rolled.
pub fn generate_board<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    palette: u8,
    layout: Option<&[CellKind]>,
    rng: &mut R,
) -> Result<Board> {
    let base = match layout {
        Some(l) => Board::from_layout(rows, cols, palette, l)?,
        None => Board::filled(rows, cols, Tile::Empty)?.with_palette(palette),
    };
    let palette = base.palette();
    'fill: for _ in 0..MAX_FILLS {
        let mut b = base.clone();
        for i in 0..rows * cols {
            let p = b.pos_of(i);
            if !b.is_playable(p) || b.get(p) != Tile::Empty {
                continue;
            }
            let allowed: Vec<u8> = (1..=palette).filter(|&c| !completes_run(&b, p, c)).collect();
            if allowed.is_empty() {
                continue 'fill;
            }
            b.set(p, Tile::Color(allowed[rng.gen_range(0..allowed.len())]));
        }
        return ensure_playable(&b, rng);
    }
    Err(Error::Unplayable { attempts: MAX_FILLS })
}

/// Embeds the board in the top-left corner of a 9x9 board; padding cells are
/// empty and non-playable.
pub fn zero_pad(board: &Board) -> Board {
    let mut cells = vec![Tile::Empty; MAX_DIM * MAX_DIM];
    let mut playable = vec![false; MAX_DIM * MAX_DIM];
    for p in board.positions() {
        let i = p.row * MAX_DIM + p.col;
        cells[i] = board.get(p);
        playable[i] = board.is_playable(p);
    }
    Board::from_parts(MAX_DIM, MAX_DIM, board.palette(), cells, playable)
}
