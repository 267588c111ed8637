//! Provider backed by a file of precomputed text embeddings.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::{normalize_text, EmbeddingProvider, Vector};
use crate::{Error, Result};

/// Looks texts up in a table of precomputed vectors (e.g. exported from a
/// real text encoder). Lookup keys are normalized the same way the synthetic
/// provider tokenizes: lowercase, single spaces.
#[derive(Debug, Clone)]
pub struct FileProvider {
    dimension: usize,
    vectors: HashMap<String, Vector>,
}

/// Tag-to-mood cosine table, one mood per file.
#[derive(Debug, Clone, Deserialize)]
pub struct CosineFixture {
    pub mood: String,
    pub tags: Vec<(String, f64)>,
}

impl FileProvider {
    pub fn new(dimension: usize, vectors: HashMap<String, Vector>) -> Result<Self> {
        let mut table = HashMap::with_capacity(vectors.len());
        for (text, v) in vectors {
            v.check_dim(dimension)?;
            table.insert(normalize_text(&text), v.normalized()?);
        }
        Ok(Self {
            dimension,
            vectors: table,
        })
    }

    /// Reads a JSON object mapping text to an array of floats.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let vectors: HashMap<String, Vector> = serde_json::from_str(&raw)?;
        let dimension = vectors
            .values()
            .next()
            .map(Vector::len)
            .ok_or_else(|| Error::Validation("empty embedding table".into()))?;
        Self::new(dimension, vectors)
    }

    /// Builds vectors that reproduce a measured tag-to-mood cosine table
    /// exactly: the mood is the first basis vector and each tag is rotated
    /// away from it along its own orthogonal axis.
    pub fn from_cosine_fixture(fixture: &CosineFixture, dimension: usize) -> Result<Self> {
        if fixture.tags.len() + 1 > dimension {
            return Err(Error::Validation(format!(
                "{} tags do not fit in dimension {dimension}",
                fixture.tags.len()
            )));
        }
        let mut vectors = HashMap::new();
        vectors.insert(fixture.mood.clone(), Vector::basis(dimension, 0));
        for (i, (tag, c)) in fixture.tags.iter().enumerate() {
            if !(-1.0..=1.0).contains(c) {
                return Err(Error::Validation(format!("cosine {c} out of range")));
            }
            let mut v = vec![0.0; dimension];
            v[0] = *c;
            v[i + 1] = (1.0 - c * c).sqrt();
            vectors.insert(tag.clone(), Vector::new(v));
        }
        Self::new(dimension, vectors)
    }

    pub fn load_cosine_fixture(path: &Path, dimension: usize) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let fixture: CosineFixture = serde_json::from_str(&raw)?;
        Self::from_cosine_fixture(&fixture, dimension)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileProvider {
    fn embed_text(&self, text: &str) -> Result<Vector> {
        let key = normalize_text(text);
        if key.is_empty() {
            return Err(Error::EmptyText);
        }
        self.vectors
            .get(&key)
            .cloned()
            .ok_or(Error::UnknownText(key))
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
