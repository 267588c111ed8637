//! Vector primitives, image/text embedding fusion, and text embedding providers.

mod file;
mod synthetic;
pub(crate) mod vector;

pub use file::{CosineFixture, FileProvider};
pub use synthetic::{fnv1a64, mix64, token_key, SyntheticProvider};
pub use vector::{cosine, Vector, EMBEDDING_DIM, UNIT_NORM_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::catalog::Item;
use crate::{Error, Result};

/// Source of text embeddings.
pub trait EmbeddingProvider: Send + Sync {
    /// Embeds `text` into a unit vector of [`dimension`](Self::dimension) components.
    fn embed_text(&self, text: &str) -> Result<Vector>;

    fn dimension(&self) -> usize;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed_text(&self, text: &str) -> Result<Vector> {
        (**self).embed_text(text)
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn embed_text(&self, text: &str) -> Result<Vector> {
        (**self).embed_text(text)
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

/// Lowercases and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub(crate) fn normalize_text(text: &str) -> String {
    tokenize(text).join(" ")
}

/// Image/text mixing weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BlendWeights {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            beta: 0.3,
        }
    }
}

impl BlendWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    /// Image only.
    pub fn image_only() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta > 0.0
            && self.alpha.is_finite()
            && self.beta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBlendWeights {
                alpha: self.alpha,
                beta: self.beta,
            })
        }
    }
}

/// `normalize(alpha * img + beta * txt)`.
pub fn blend_embedding(img: &Vector, txt: &Vector, w: BlendWeights) -> Result<Vector> {
    w.validate()?;
    img.check_dim(txt.len())?;
    let mut acc = img.scaled(w.alpha);
    acc.add_scaled(w.beta, txt);
    acc.normalized()
}

/// Attribute text used for the text half of an item's embedding: color, style
/// tags, material, then the category noun.
pub fn build_item_description(item: &Item) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(item.style_tags.len() + 3);
    if !item.color.is_empty() {
        parts.push(&item.color);
    }
    parts.extend(
        item.style_tags
            .iter()
            .map(String::as_str)
            .filter(|t| !t.is_empty()),
    );
    if !item.material.is_empty() {
        parts.push(&item.material);
    }
    parts.push(item.category.as_str());
    parts.join(" ").to_lowercase()
}
