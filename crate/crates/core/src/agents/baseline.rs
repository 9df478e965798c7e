use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{creates_joker, valid_moves, Move};
use crate::error::{Error, Result};
use crate::levels::MatchState;

/// Uniform over the valid moves.
pub fn random_player_select<R: Rng + ?Sized>(state: &MatchState, rng: &mut R) -> Result<Move> {
    valid_moves(&state.board).choose(rng).copied().ok_or(Error::NoMove)
}

/// Uniform over the valid moves whose immediate matches create the best
/// joker (color bomb > wrapped > striped > none).
pub fn smart_player_select<R: Rng + ?Sized>(state: &MatchState, rng: &mut R) -> Result<Move> {
    let moves = valid_moves(&state.board);
    if moves.is_empty() {
        return Err(Error::NoMove);
    }
    let ranked: Vec<(Move, u8)> = moves
        .into_iter()
        .map(|mv| {
            let rank = creates_joker(&state.board, mv)?.map_or(0, |j| j.rank());
            Ok((mv, rank))
        })
        .collect::<Result<_>>()?;
    let best = ranked.iter().map(|&(_, r)| r).max().expect("non-empty");
    let top: Vec<Move> = ranked.into_iter().filter(|&(_, r)| r == best).map(|(m, _)| m).collect();
    Ok(*top.choose(rng).expect("non-empty"))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPlayer;

impl RandomPlayer {
    pub fn select<R: Rng + ?Sized>(&self, state: &MatchState, rng: &mut R) -> Result<Move> {
        random_player_select(state, rng)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SmartPlayer;

impl SmartPlayer {
    pub fn select<R: Rng + ?Sized>(&self, state: &MatchState, rng: &mut R) -> Result<Move> {
        smart_player_select(state, rng)
    }
}
