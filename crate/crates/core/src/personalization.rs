//! Per-user taste vectors and the rotation queue.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::embedding::{Vector, EMBEDDING_DIM};
use crate::{Error, Result};

pub const DEFAULT_ETA: f64 = 0.2;
pub const DEFAULT_ROTATION_CAPACITY: usize = 20;
pub const DEFAULT_ROTATION_MULTIPLIER: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TasteProfile {
    pub t_like: Vector,
    pub t_dislike: Vector,
    pub eta: f64,
}

impl Default for TasteProfile {
    fn default() -> Self {
        Self::new(DEFAULT_ETA)
    }
}

impl TasteProfile {
    pub fn new(eta: f64) -> Self {
        Self {
            t_like: Vector::zeros(EMBEDDING_DIM),
            t_dislike: Vector::zeros(EMBEDDING_DIM),
            eta,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.t_like.as_slice().iter().chain(self.t_dislike.as_slice()).all(|&x| x == 0.0)
    }
}

/// EMA step toward the mean of the outfit's item embeddings. Only the vector
/// matching the feedback polarity moves.
pub fn update_taste<'a>(
    profile: &TasteProfile,
    embeddings: impl IntoIterator<Item = &'a Vector>,
    liked: bool,
) -> Result<TasteProfile> {
    if !(profile.eta > 0.0 && profile.eta <= 1.0) {
        return Err(Error::Config(format!("eta {} outside (0, 1]", profile.eta)));
    }
    let mean = Vector::mean(embeddings).ok_or(Error::EmptyOutfit)?;
    mean.check_dim(profile.t_like.len())?;
    let mut next = profile.clone();
    let target = if liked { &mut next.t_like } else { &mut next.t_dislike };
    let mut v = target.scaled(1.0 - profile.eta);
    v.add_scaled(profile.eta, &mean);
    *target = v;
    Ok(next)
}

/// FIFO of recently suggested item ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationQueue {
    pub capacity: usize,
    pub entries: VecDeque<String>,
    pub penalty_multiplier: f64,
}

impl Default for RotationQueue {
    fn default() -> Self {
        Self::new(DEFAULT_ROTATION_CAPACITY, DEFAULT_ROTATION_MULTIPLIER)
    }
}

impl RotationQueue {
    pub fn new(capacity: usize, penalty_multiplier: f64) -> Self {
        Self {
            capacity,
            entries: VecDeque::new(),
            penalty_multiplier,
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.iter().any(|e| e == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance multiplier for `id` in the rerank.
    pub fn multiplier(&self, id: &str) -> f64 {
        if self.contains(id) {
            self.penalty_multiplier
        } else {
            1.0
        }
    }
}

pub fn touch_rotation<'a>(queue: &RotationQueue, suggested: impl IntoIterator<Item = &'a str>) -> RotationQueue {
    let mut next = queue.clone();
    for id in suggested {
        next.entries.retain(|e| e != id);
        next.entries.push_back(id.to_string());
        while next.entries.len() > next.capacity {
            next.entries.pop_front();
        }
    }
    next
}
