use std::collections::VecDeque;

use rand::Rng;

pub const DEFAULT_CAPACITY: usize = 10_000;
pub const DEFAULT_SAMPLE_SIZE: usize = 32;

/// One experienced move. `next_valid` is empty for terminal next states;
/// `gamma` is the discount in force when the move was played.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub next_state: Vec<T>,
    pub next_valid: Vec<usize>,
    pub gamma: T,
}

/// Bounded FIFO of transitions; the oldest is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayMemory<T> {
    buffer: VecDeque<Transition<T>>,
    capacity: usize,
    sample_size: usize,
}

impl<T: Clone> ReplayMemory<T> {
    pub fn new(capacity: usize, sample_size: usize) -> Self {
        let capacity = capacity.max(1);
        ReplayMemory {
            buffer: VecDeque::with_capacity(capacity.min(DEFAULT_CAPACITY)),
            capacity,
            sample_size: sample_size.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        self.buffer.iter()
    }

    /// `sample_size` distinct transitions chosen uniformly, or all of them
    /// (oldest first) while fewer are stored.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Transition<T>> {
        if self.buffer.len() <= self.sample_size {
            return self.buffer.iter().cloned().collect();
        }
        rand::seq::index::sample(rng, self.buffer.len(), self.sample_size)
            .into_iter()
            .map(|i| self.buffer[i].clone())
            .collect()
    }
}

impl<T: Clone> Default for ReplayMemory<T> {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY, DEFAULT_SAMPLE_SIZE)
    }
}
