//! Scoring primitives that read meaning off embedding geometry: occasion
//! vibe/anti-vibe affinity, heavy-vs-light material weight, and per-tag mood
//! similarity.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::ann::ScoredId;
use crate::catalog::{Catalog, Item};
use crate::embedding::{cosine, EmbeddingProvider, Vector};
use crate::{Error, Result};

/// Text and strictness settings of one occasion, as stored in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccasionConfig {
    pub vibe: String,
    pub anti_vibe: String,
    pub lambda: f64,
    #[serde(default)]
    pub unconditional_anti_weight: f64,
    pub keep_fraction: f64,
    #[serde(default = "default_floor")]
    pub min_floor: usize,
}

fn default_floor() -> usize {
    3
}

impl OccasionConfig {
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::Config(format!("occasion {name}: lambda must be >= 0")));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "occasion {name}: keep_fraction must be in (0, 1]"
            )));
        }
        if self.min_floor < 1 {
            return Err(Error::Config(format!("occasion {name}: min_floor must be >= 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccasionProfile {
    pub name: String,
    pub vibe_text: String,
    pub anti_vibe_text: String,
    pub vibe_vec: Vector,
    pub anti_vec: Vector,
    pub lambda: f64,
    pub unconditional_anti_weight: f64,
    pub keep_fraction: f64,
    pub min_floor: usize,
}

impl OccasionProfile {
    pub fn embed(name: &str, cfg: &OccasionConfig, provider: &dyn EmbeddingProvider) -> Result<Self> {
        cfg.validate(name)?;
        Ok(Self {
            name: name.to_string(),
            vibe_text: cfg.vibe.clone(),
            anti_vibe_text: cfg.anti_vibe.clone(),
            vibe_vec: provider.embed_text(&cfg.vibe)?,
            anti_vec: provider.embed_text(&cfg.anti_vibe)?,
            lambda: cfg.lambda,
            unconditional_anti_weight: cfg.unconditional_anti_weight,
            keep_fraction: cfg.keep_fraction,
            min_floor: cfg.min_floor,
        })
    }
}

fn cos(a: &Vector, b: &Vector) -> f64 {
    cosine(a, b).unwrap_or(0.0)
}

/// Differential vibe affinity:
/// `cos(e,v) - lambda * max(0, cos(e,a) - cos(e,v)) - w_u * cos(e,a)`.
pub fn occasion_score(item_vec: &Vector, o: &OccasionProfile) -> f64 {
    let to_vibe = cos(item_vec, &o.vibe_vec);
    let to_anti = cos(item_vec, &o.anti_vec);
    to_vibe - o.lambda * (to_anti - to_vibe).max(0.0) - o.unconditional_anti_weight * to_anti
}

/// Keeps candidates scoring at least `keep_fraction` of the best occasion
/// score, topping up to `min_floor` by score when too few survive. A
/// nonpositive best score keeps only the floor. Survivors stay in input order.
pub fn filter_by_occasion(candidates: &[ScoredId], catalog: &Catalog, o: &OccasionProfile) -> Vec<ScoredId> {
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| catalog.get(&c.id).map(|item| (i, occasion_score(&item.embedding, o))))
        .collect();
    let Some(top) = scored.iter().map(|&(_, s)| s).max_by(f64::total_cmp) else {
        return Vec::new();
    };

    let mut keep: Vec<usize> = if top > 0.0 {
        scored
            .iter()
            .filter(|&&(_, s)| s >= o.keep_fraction * top)
            .map(|&(i, _)| i)
            .collect()
    } else {
        Vec::new()
    };
    if keep.len() < o.min_floor {
        let mut by_score = scored.clone();
        by_score.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        keep = by_score.into_iter().take(o.min_floor).map(|(i, _)| i).collect();
        keep.sort_unstable();
    }
    keep.into_iter().map(|i| candidates[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub heavy: String,
    pub light: String,
    pub tau: f64,
    /// Name words that say something about garment weight.
    pub weight_keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialContext {
    pub heavy_vec: Vector,
    pub light_vec: Vector,
    pub tau: f64,
    pub weight_keywords: Vec<String>,
}

impl MaterialContext {
    pub fn embed(cfg: &MaterialConfig, provider: &dyn EmbeddingProvider) -> Result<Self> {
        if cfg.tau.is_nan() || cfg.tau < 0.0 {
            return Err(Error::Config("material tau must be >= 0".into()));
        }
        Ok(Self {
            heavy_vec: provider.embed_text(&cfg.heavy)?,
            light_vec: provider.embed_text(&cfg.light)?,
            tau: cfg.tau,
            weight_keywords: cfg.weight_keywords.iter().map(|k| k.to_lowercase()).collect(),
        })
    }

    /// `"{material} {category} {weight keywords from the name}"`.
    pub fn material_text(&self, item: &Item) -> String {
        let mut parts: Vec<String> = Vec::new();
        if !item.material.is_empty() {
            parts.push(item.material.clone());
        }
        parts.push(item.category.as_str().to_string());
        parts.extend(
            item.name
                .split_whitespace()
                .map(str::to_lowercase)
                .filter(|w| self.weight_keywords.iter().any(|k| k == w)),
        );
        parts.join(" ")
    }
}

/// `cos(e, heavy) - cos(e, light)` for the embedding of `material_text`.
pub fn material_weight(ctx: &MaterialContext, material_text: &str, provider: &dyn EmbeddingProvider) -> Result<f64> {
    if material_text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let e = provider.embed_text(material_text)?;
    Ok(weight_of_vector(ctx, &e))
}

pub fn weight_of_vector(ctx: &MaterialContext, e: &Vector) -> f64 {
    cos(e, &ctx.heavy_vec) - cos(e, &ctx.light_vec)
}

/// A layer may go over a top when it is at most `tau` lighter.
pub fn layer_compatible(w_layer: f64, w_top: f64, tau: f64) -> bool {
    w_layer >= w_top - tau
}

/// Best single-tag match of an item against a free-text mood.
pub fn mood_score(item: &Item, mood: &str, provider: &dyn EmbeddingProvider) -> Result<f64> {
    if item.style_tags.is_empty() {
        return Err(Error::NoStyleTags);
    }
    let mood_vec = provider.embed_text(mood)?;
    let mut best = f64::NEG_INFINITY;
    for tag in &item.style_tags {
        let s = cosine(&provider.embed_text(tag)?, &mood_vec)?;
        if s.partial_cmp(&best) == Some(Ordering::Greater) {
            best = s;
        }
    }
    Ok(best)
}
