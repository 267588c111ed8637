//! Deterministic bag-of-tokens text embedder.
//!
//! Every token maps to a fixed pseudo-random unit direction; a text embeds to
//! the normalized sum of its token directions. Texts that share tokens are
//! therefore closer than texts that do not, which is all the scoring pipeline
//! needs from a text encoder. The generator is SplitMix64 run in counter mode,
//! keyed by `mix64(seed ^ fnv1a64(token))`, so vectors are bit-stable across
//! runs and platforms and can be reproduced from other languages.

use serde::{Deserialize, Serialize};

use super::{tokenize, EmbeddingProvider, Vector, EMBEDDING_DIM};
use crate::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Key of the per-token generator stream.
pub fn token_key(seed: u64, token: &str) -> u64 {
    mix64(seed ^ fnv1a64(token.as_bytes()))
}

/// Counter-based SplitMix64 stream.
#[derive(Debug, Clone)]
struct CounterStream {
    key: u64,
    counter: u64,
}

impl CounterStream {
    fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normals (Box-Muller).
    fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticProvider {
    pub seed: u64,
    pub dimension: usize,
}

impl Default for SyntheticProvider {
    fn default() -> Self {
        Self {
            seed: 0,
            dimension: EMBEDDING_DIM,
        }
    }
}

impl SyntheticProvider {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            dimension: EMBEDDING_DIM,
        }
    }

    pub fn with_dimension(seed: u64, dimension: usize) -> Self {
        Self { seed, dimension }
    }

    /// Unit direction assigned to a single token.
    pub fn token_vector(&self, token: &str) -> Vector {
        let mut stream = CounterStream::new(token_key(self.seed, token));
        let mut components = Vec::with_capacity(self.dimension);
        while components.len() < self.dimension {
            let (a, b) = stream.next_normal_pair();
            components.push(a);
            if components.len() < self.dimension {
                components.push(b);
            }
        }
        Vector::new(components)
            .normalized()
            .expect("gaussian draw of positive dimension is nonzero")
    }
}

impl EmbeddingProvider for SyntheticProvider {
    fn embed_text(&self, text: &str) -> Result<Vector> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::EmptyText);
        }
        let mut acc = Vector::zeros(self.dimension);
        for token in &tokens {
            acc.add_scaled(1.0, &self.token_vector(token));
        }
        acc.normalized()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
