use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::{
    action_to_move, argmax, bellman_update, compute_reward, discount_at, encode_state, masked_distribution,
    move_to_action, valid_actions, ReplayMemory, RewardConfig, Transition, ACTIONS, STATE_LEN,
};
use crate::engine::{Move, MoveOutcome};
use crate::error::{Error, Result};
use crate::levels::MatchState;
use crate::nn::{
    clone_weights, load_checkpoint, mse_batch, save_checkpoint, AdamState, CheckpointMeta, Matrix, Mode, Network, ARCH,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentConfig {
    /// Optimizer steps per supervised feedback step.
    pub k1: usize,
    /// Optimizer steps per replay step.
    pub k2: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Bellman mixing rate.
    pub alpha_rl: f64,
    /// Adam learning rate.
    pub learning_rate: f64,
    pub reward: RewardConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            k1: 20,
            k2: 5,
            replay_capacity: super::replay::DEFAULT_CAPACITY,
            batch_size: super::replay::DEFAULT_SAMPLE_SIZE,
            alpha_rl: 0.1,
            learning_rate: 0.001,
            reward: RewardConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        if !(self.alpha_rl > 0.0 && self.alpha_rl <= 1.0) {
            return Err(Error::Parameter(format!("alpha_rl {} outside (0, 1]", self.alpha_rl)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning rate {}", self.learning_rate)));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 {
            return Err(Error::Parameter(
                "replay capacity and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectMode {
    /// Penalize invalid outputs, then sample from the masked distribution.
    Train,
    /// Argmax of the masked distribution; the networks are not touched.
    Eval,
}

/// Main network, oracle network, optimizer and replay memory.
#[derive(Clone, Debug)]
pub struct JellyGym<T> {
    main: Network<T>,
    oracle: Network<T>,
    adam: AdamState<T>,
    memory: ReplayMemory<T>,
    pub(super) config: AgentConfig,
    episodes_trained: u64,
}

impl<T: Scalar> JellyGym<T> {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, rng: &mut R) -> Result<Self> {
        Self::from_network(Network::jellygym(rng), config)
    }

    /// Agent starting from `main`; the oracle starts as its copy.
    pub fn from_network(main: Network<T>, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        if main.arch() != ARCH {
            return Err(Error::Shape(format!("agent needs {:?}, got {:?}", ARCH, main.arch())));
        }
        let adam = AdamState::with_rate(&main, T::of(config.learning_rate));
        Ok(JellyGym {
            oracle: main.clone(),
            main,
            adam,
            memory: ReplayMemory::new(config.replay_capacity, config.batch_size),
            config,
            episodes_trained: 0,
        })
    }

    pub fn load(path: &Path, config: AgentConfig) -> Result<Self> {
        let ckpt = load_checkpoint::<T>(path, &ARCH)?;
        let mut agent = Self::from_network(ckpt.network, config)?;
        if let Some(mut adam) = ckpt.adam {
            adam.alpha = T::of(config.learning_rate);
            agent.adam = adam;
        }
        agent.episodes_trained = ckpt.meta.episodes_trained;
        Ok(agent)
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = CheckpointMeta {
            seed,
            created: created_stamp(),
            episodes_trained: self.episodes_trained,
        };
        save_checkpoint(path, &self.main, Some(&self.adam), &meta)
    }

    pub fn main(&self) -> &Network<T> {
        &self.main
    }

    pub fn main_mut(&mut self) -> &mut Network<T> {
        &mut self.main
    }

    pub fn oracle(&self) -> &Network<T> {
        &self.oracle
    }

    pub fn memory(&self) -> &ReplayMemory<T> {
        &self.memory
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn adam(&self) -> &AdamState<T> {
        &self.adam
    }

    pub fn episodes_trained(&self) -> u64 {
        self.episodes_trained
    }

    /// Inference-mode Q-values (the logits) of the main network.
    pub fn q_values(&self, state: &[T]) -> Result<Vec<T>> {
        self.main.predict(state)
    }

    /// `steps` Adam steps of MSE between the main network's logits and `targets`.
    /// Returns the loss measured before the last step.
    fn fit(&mut self, inputs: &Matrix<T>, targets: &Matrix<T>, steps: usize) -> Result<T> {
        let mut loss = T::zero();
        for _ in 0..steps {
            let pass = self.main.forward_batch(inputs, Mode::Train)?;
            let (l, dl) = mse_batch(&pass.logits, targets)?;
            let grads = self.main.backward(&pass.cache, &dl)?;
            self.adam.step(&mut self.main, &grads)?;
            loss = l;
        }
        Ok(loss)
    }

    /// Pulls the logits toward `-1` everywhere except `utility` at `action`.
    /// Non-positive utilities are ignored.
    pub fn supervised_feedback_step(&mut self, state: &[T], action: usize, utility: f64) -> Result<Option<T>> {
        if action >= ACTIONS {
            return Err(Error::Index {
                index: action,
                len: ACTIONS,
            });
        }
        if !(utility > 0.0) {
            return Ok(None);
        }
        let x = Matrix::from_vec(1, STATE_LEN, state.to_vec())?;
        let mut target = vec![-T::one(); ACTIONS];
        target[action] = T::of(utility);
        let y = Matrix::from_vec(1, ACTIONS, target)?;
        self.fit(&x, &y, self.config.k1).map(Some)
    }

    /// One MSE step that keeps the current Q-values on valid actions and
    /// pulls every other output to `-1`. Returns the valid set.
    pub fn invalid_penalty_step(&mut self, state: &MatchState) -> Result<Vec<usize>> {
        let valid = valid_actions(&state.board);
        if valid.is_empty() {
            return Err(Error::NoMove);
        }
        let s = encode_state::<T>(state);
        let mut target = self.main.predict(&s)?;
        let mut is_valid = vec![false; ACTIONS];
        valid.iter().for_each(|&i| is_valid[i] = true);
        for (t, ok) in target.iter_mut().zip(&is_valid) {
            if !ok {
                *t = -T::one();
            }
        }
        let x = Matrix::from_vec(1, STATE_LEN, s)?;
        let y = Matrix::from_vec(1, ACTIONS, target)?;
        self.fit(&x, &y, 1)?;
        Ok(valid)
    }

    /// Masked move distribution of the main network over `valid`.
    pub fn move_distribution(&self, state: &MatchState, valid: &[usize]) -> Result<Vec<T>> {
        let p = self.main.predict_probabilities(&encode_state::<T>(state))?;
        masked_distribution(&p, valid)
    }

    pub fn select_move<R: Rng + ?Sized>(&mut self, state: &MatchState, mode: SelectMode, rng: &mut R) -> Result<Move> {
        match mode {
            SelectMode::Train => {
                let valid = self.invalid_penalty_step(state)?;
                let dist = self.move_distribution(state, &valid)?;
                action_to_move(sample_index(&dist, rng)?)
            }
            SelectMode::Eval => self.greedy_move(state),
        }
    }

    /// Eval-mode selection without mutating the agent.
    pub fn greedy_move(&self, state: &MatchState) -> Result<Move> {
        let valid = valid_actions(&state.board);
        let dist = self.move_distribution(state, &valid)?;
        action_to_move(argmax(&dist))
    }

    /// Bellman targets from the oracle, then `k2` MSE steps on the batch.
    pub fn ddqn_replay_step(&mut self, batch: &[Transition<T>]) -> Result<T> {
        if batch.is_empty() {
            return Err(Error::Batch("empty replay batch".into()));
        }
        let n = batch.len();
        let states: Vec<T> = batch.iter().flat_map(|t| t.state.iter().copied()).collect();
        let x = Matrix::from_vec(n, STATE_LEN, states)?;
        let next: Vec<T> = batch.iter().flat_map(|t| t.next_state.iter().copied()).collect();
        let next_q = self
            .oracle
            .evaluate(&Matrix::from_vec(n, STATE_LEN, next)?, Mode::Infer)?
            .logits;
        let mut targets = self.main.evaluate(&x, Mode::Train)?.logits;
        let alpha = T::of(self.config.alpha_rl);
        for (b, t) in batch.iter().enumerate() {
            if t.action >= ACTIONS {
                return Err(Error::Index {
                    index: t.action,
                    len: ACTIONS,
                });
            }
            let q_next = next_q.row(b);
            let max_next = t
                .next_valid
                .iter()
                .map(|&i| q_next[i])
                .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.max(v))))
                .unwrap_or_else(T::zero);
            let row = targets.row_mut(b);
            row[t.action] = bellman_update(row[t.action], t.reward, max_next, alpha, t.gamma)?;
        }
        self.fit(&x, &targets, self.config.k2)
    }

    pub fn remember(&mut self, t: Transition<T>) {
        self.memory.push(t);
    }

    /// Learning after one played move: supervised feedback on rewarded moves,
    /// storage of the transition and one replay step. Returns the reward.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        before: &MatchState,
        mv: Move,
        after: &MatchState,
        outcome: &MoveOutcome,
        rng: &mut R,
    ) -> Result<f64> {
        let reward = compute_reward(before, after, &outcome.cascade, outcome.valid, &self.config.reward);
        let state = encode_state::<T>(before);
        let action = move_to_action(mv)?;
        self.supervised_feedback_step(&state, action, reward)?;
        let next_valid = if after.is_terminal() {
            Vec::new()
        } else {
            valid_actions(&after.board)
        };
        let gamma = discount_at(before.moves_used(), before.move_budget, &self.config.reward);
        self.remember(Transition {
            state,
            action,
            reward: T::of(reward),
            next_state: encode_state(after),
            next_valid,
            gamma: T::of(gamma),
        });
        let batch = self.memory.sample(rng);
        self.ddqn_replay_step(&batch)?;
        Ok(reward)
    }

    pub fn sync_oracle(&mut self) {
        clone_weights(&self.main, &mut self.oracle).expect("main and oracle share one architecture");
    }

    /// Syncs the oracle and counts the episode.
    pub fn finish_episode(&mut self) {
        self.sync_oracle();
        self.episodes_trained += 1;
    }
}

fn sample_index<T: Scalar, R: Rng + ?Sized>(dist: &[T], rng: &mut R) -> Result<usize> {
    let weights: Vec<f64> = dist.iter().map(|p| p.as_f64()).collect();
    let w = WeightedIndex::new(&weights).map_err(|e| Error::Parameter(format!("move distribution: {e}")))?;
    Ok(w.sample(rng))
}

/// Checkpoint timestamp: `SOURCE_DATE_EPOCH` when set, else 0, so that
/// identical runs write identical files.
fn created_stamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}
