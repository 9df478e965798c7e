//! Synthetic players and the pieces they share: state encoding, the
//! 324-way action space, masking, rewards and the Bellman update.

mod baseline;
mod jellygym;
mod pretrain;
mod replay;

pub use baseline::{random_player_select, smart_player_select, RandomPlayer, SmartPlayer};
pub use jellygym::{AgentConfig, JellyGym, SelectMode};
pub use pretrain::{build_dataset, pretrain_supervised, valid_mass, PretrainConfig, PretrainReport};
pub use replay::{ReplayMemory, Transition};

use crate::engine::Board;
use crate::engine::{hamming_distance, is_valid_move, CascadeOutcome, Direction, JokerKind, Move, Pos, Tile, MAX_DIM};
use crate::error::{Error, Result};
use crate::levels::MatchState;
use crate::scalar::Scalar;

pub const BOARD_CELLS: usize = MAX_DIM * MAX_DIM;
pub const STATE_LEN: usize = BOARD_CELLS + 1;
pub const ACTIONS: usize = BOARD_CELLS * 4;

/// Network input code of a tile. Colors are `c/6`, empty cells and holes 0.
pub fn tile_code(tile: Tile) -> f64 {
    match tile {
        Tile::Empty => 0.0,
        Tile::Color(c) => c as f64 / 6.0,
        Tile::Blocker => -1.0 / 6.0,
        Tile::Joker(JokerKind::StripedRow) => 7.0 / 6.0,
        Tile::Joker(JokerKind::StripedCol) => 8.0 / 6.0,
        Tile::Joker(JokerKind::Wrapped) => 9.0 / 6.0,
        Tile::Joker(JokerKind::ColorBomb) => 10.0 / 6.0,
    }
}

/// 81 row-major codes of the board placed top-left in a 9x9 frame, then the
/// remaining objective fraction.
pub fn encode_state<T: Scalar>(state: &MatchState) -> Vec<T> {
    encode_board(&state.board, state.objective_scalar())
}

pub fn encode_board<T: Scalar>(board: &Board, objective: f64) -> Vec<T> {
    let mut v = vec![T::zero(); STATE_LEN];
    for p in board.positions() {
        v[p.row * MAX_DIM + p.col] = T::of(tile_code(board.get(p)));
    }
    v[BOARD_CELLS] = T::of(objective);
    v
}

pub fn action_to_move(index: usize) -> Result<Move> {
    if index >= ACTIONS {
        return Err(Error::Index { index, len: ACTIONS });
    }
    let cell = index / 4;
    let dir = Direction::from_index(index % 4).expect("index % 4 < 4");
    Ok(Move {
        pos: Pos::new(cell / MAX_DIM, cell % MAX_DIM),
        dir,
    })
}

pub fn move_to_action(mv: Move) -> Result<usize> {
    if mv.pos.row >= MAX_DIM || mv.pos.col >= MAX_DIM {
        return Err(Error::Index {
            index: mv.pos.row * MAX_DIM + mv.pos.col,
            len: BOARD_CELLS,
        });
    }
    Ok((mv.pos.row * MAX_DIM + mv.pos.col) * 4 + mv.dir.index())
}

/// Indices whose swap stays on playable cells of `board` (padding counts as off-board).
pub fn positional_actions(board: &Board) -> Vec<usize> {
    (0..ACTIONS)
        .filter(|&i| board.is_positionally_legal(action_to_move(i).expect("in range")))
        .collect()
}

/// Ascending indices of every valid move on `board`.
pub fn valid_actions(board: &Board) -> Vec<usize> {
    (0..ACTIONS)
        .filter(|&i| {
            let mv = action_to_move(i).expect("in range");
            board.is_positionally_legal(mv) && is_valid_move(board, mv).unwrap_or(false)
        })
        .collect()
}

/// Zeroes mass outside `valid` and renormalizes; uniform over `valid` if
/// its mass underflows.
pub fn masked_distribution<T: Scalar>(probabilities: &[T], valid: &[usize]) -> Result<Vec<T>> {
    if valid.is_empty() {
        return Err(Error::NoMove);
    }
    if let Some(&bad) = valid.iter().find(|&&i| i >= probabilities.len()) {
        return Err(Error::Index {
            index: bad,
            len: probabilities.len(),
        });
    }
    let mut out = vec![T::zero(); probabilities.len()];
    let mass: T = valid.iter().map(|&i| probabilities[i].max(T::zero())).sum();
    if mass > T::zero() && mass.is_finite() {
        for &i in valid {
            out[i] = probabilities[i].max(T::zero()) / mass;
        }
    } else {
        let u = T::one() / T::of(valid.len() as f64);
        for &i in valid {
            out[i] = u;
        }
    }
    Ok(out)
}

/// Highest-probability index; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig {
    pub invalid_penalty: f64,
    pub progress_required: bool,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            invalid_penalty: -1.0,
            progress_required: true,
            gamma_min: 0.50,
            gamma_max: 0.99,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.gamma_min)
            && (0.0..1.0).contains(&self.gamma_max)
            && self.gamma_min <= self.gamma_max;
        if !ok {
            return Err(Error::Parameter(format!(
                "need 0 <= gamma_min <= gamma_max < 1, got {} and {}",
                self.gamma_min, self.gamma_max
            )));
        }
        Ok(())
    }
}

/// Cells changed by a valid, objective-advancing move; the penalty otherwise.
pub fn compute_reward(
    before: &MatchState,
    after: &MatchState,
    _outcome: &CascadeOutcome,
    valid: bool,
    cfg: &RewardConfig,
) -> f64 {
    let advanced = after.progress > before.progress;
    if valid && (advanced || !cfg.progress_required) {
        hamming_distance(&before.board, &after.board).map_or(cfg.invalid_penalty, |d| d as f64)
    } else {
        cfg.invalid_penalty
    }
}

/// Discount rising linearly from `gamma_min` at the first move to
/// `gamma_max` when the budget is spent.
pub fn discount_at(moves_used: u32, budget: u32, cfg: &RewardConfig) -> f64 {
    if budget == 0 {
        return cfg.gamma_max;
    }
    let f = (moves_used.min(budget)) as f64 / budget as f64;
    cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * f
}

/// `(1 - alpha) q_old + alpha (reward + gamma max_next_q)`.
pub fn bellman_update<T: Scalar>(q_old: T, reward: T, max_next_q: T, alpha: T, gamma: T) -> Result<T> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Parameter(format!("alpha {alpha} outside (0, 1]")));
    }
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::Parameter(format!("gamma {gamma} outside [0, 1)")));
    }
    Ok((T::one() - alpha) * q_old + alpha * (reward + gamma * max_next_q))
}
