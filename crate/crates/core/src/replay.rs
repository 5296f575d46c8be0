//! Bounded FIFO replay memory with uniform sampling.

use rand::Rng as _;
use std::collections::VecDeque;

use crate::rng::Rng;
use crate::{PdError, Result};

/// Ring of entries with strict FIFO eviction and uniform sampling with
/// replacement. The sampler RNG lives inside the memory so a seeded memory
/// replays its sample sequence exactly.
#[derive(Debug, Clone)]
pub struct ReplayMemory<T> {
    capacity: usize,
    storage: VecDeque<T>,
    rng: Rng,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize, rng: Rng) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            capacity,
            storage: VecDeque::with_capacity(capacity),
            rng,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    /// Appends an entry, evicting the oldest when full.
    pub fn push(&mut self, entry: T) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(entry);
    }

    /// Draws `count` indices uniformly with replacement.
    pub fn sample_indices(&mut self, count: usize) -> Result<Vec<usize>> {
        if self.storage.is_empty() {
            return Err(PdError::EmptyMemory);
        }
        let len = self.storage.len();
        Ok((0..count).map(|_| self.rng.gen_range(0..len)).collect())
    }

    pub fn get(&self, index: usize) -> &T {
        &self.storage[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.storage.iter()
    }
}
