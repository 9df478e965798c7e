use rand::seq::SliceRandom;
use rand::Rng;

use super::{encode_board, valid_actions, STATE_LEN};
use crate::engine::{generate_board, Board, MAX_DIM, NUM_COLORS};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy_batch, AdamState, Matrix, Mode, Network};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PretrainConfig {
    pub passes: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            passes: 10,
            batch_size: 32,
            learning_rate: 0.001,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainReport {
    pub boards: usize,
    pub pairs: usize,
    /// Mean cross-entropy of each pass.
    pub pass_losses: Vec<f64>,
}

/// `(encoded board, valid action)` pairs from `boards` random playable 9x9
/// boards with a full objective. Each board contributes every valid move.
pub fn build_dataset<T: Scalar, R: Rng + ?Sized>(boards: usize, rng: &mut R) -> Result<Vec<(Vec<T>, usize)>> {
    let mut pairs = Vec::new();
    for _ in 0..boards {
        let board = generate_board(MAX_DIM, MAX_DIM, NUM_COLORS, None, rng)?;
        let state = encode_board::<T>(&board, 1.0);
        for a in valid_actions(&board) {
            pairs.push((state.clone(), a));
        }
    }
    Ok(pairs)
}

/// Cross-entropy training on valid moves of random boards.
pub fn pretrain_supervised<T: Scalar, R: Rng + ?Sized>(
    net: &mut Network<T>,
    boards: usize,
    cfg: &PretrainConfig,
    rng: &mut R,
) -> Result<PretrainReport> {
    if boards == 0 || cfg.batch_size == 0 {
        return Err(Error::Parameter("boards and batch size must be positive".into()));
    }
    let mut data = build_dataset::<T, R>(boards, rng)?;
    let mut adam = AdamState::with_rate(net, T::of(cfg.learning_rate));
    let mut pass_losses = Vec::with_capacity(cfg.passes);
    for _ in 0..cfg.passes {
        data.shuffle(rng);
        let (mut total, mut batches) = (0.0, 0usize);
        for chunk in data.chunks(cfg.batch_size) {
            let x = Matrix::from_vec(
                chunk.len(),
                STATE_LEN,
                chunk.iter().flat_map(|(s, _)| s.iter().copied()).collect(),
            )?;
            let labels: Vec<usize> = chunk.iter().map(|&(_, a)| a).collect();
            let pass = net.forward_batch(&x, Mode::Train)?;
            let (loss, dl) = cross_entropy_batch(&pass.probabilities, &labels)?;
            let grads = net.backward(&pass.cache, &dl)?;
            adam.step(net, &grads)?;
            total += loss.as_f64();
            batches += 1;
        }
        pass_losses.push(total / batches as f64);
    }
    Ok(PretrainReport {
        boards,
        pairs: data.len(),
        pass_losses,
    })
}

/// Inference-mode probability mass the network puts on valid moves of `board`.
pub fn valid_mass<T: Scalar>(net: &Network<T>, board: &Board) -> Result<T> {
    let p = net.predict_probabilities(&encode_board::<T>(board, 1.0))?;
    Ok(valid_actions(board).iter().map(|&i| p[i]).sum())
}
