//! Outfit recommendation engine: anchor-conditioned retrieval over a
//! category-partitioned vector index, occasion and material semantics from
//! embedded prose, and a rule-based multi-signal outfit score.

pub mod ann;
pub mod cache;
pub mod catalog;
pub mod config;
pub mod embedding;
pub mod engine;
mod error;
pub mod generator;
pub mod personalization;
pub mod retrieval;
pub mod scoring;
pub mod semantics;

pub use engine::Engine;
pub use error::{Error, Result};
