//! Per-slot candidate retrieval: query construction, index search, occasion
//! filter, color/rotation rerank with multiplicative noise.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ann::{AnnIndex, ScoredId, SearchRequest};
use crate::catalog::{Catalog, Category, Item};
use crate::config::RetrievalConfig;
use crate::embedding::{mix64, EmbeddingProvider, Vector};
use crate::personalization::RotationQueue;
use crate::scoring::Direction;
use crate::semantics::{filter_by_occasion, layer_compatible, OccasionProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SlotQuery {
    pub slot: Category,
    pub text: String,
    pub vector: Vector,
    pub fetch_limit: usize,
}

/// Anchor color and tags, the slot hint, then the direction modifier.
pub fn build_slot_query(
    anchor: &Item,
    slot: Category,
    direction: &Direction,
    hints: &BTreeMap<Category, String>,
    fetch_limit: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<SlotQuery> {
    if slot == anchor.category {
        return Err(Error::SlotIsAnchorCategory(slot));
    }
    let mut parts: Vec<&str> = Vec::new();
    if !anchor.color.is_empty() {
        parts.push(&anchor.color);
    }
    parts.extend(anchor.style_tags.iter().map(String::as_str));
    parts.push(hints.get(&slot).map(String::as_str).unwrap_or(slot.as_str()));
    parts.push(&direction.query_modifier);
    let text = parts.join(" ");
    let vector = provider.embed_text(&text)?;
    Ok(SlotQuery {
        slot,
        text,
        vector,
        fetch_limit: fetch_limit.max(1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankPolicy {
    pub preferred_colors: BTreeSet<String>,
    pub neutrals: BTreeSet<String>,
    pub preferred_multiplier: f64,
    pub neutral_multiplier: f64,
    pub noise_low: f64,
    pub noise_high: f64,
    pub rng_seed: u64,
    pub rotation: Option<RotationQueue>,
}

impl RerankPolicy {
    /// A disabled direction keeps its query modifier but loses its
    /// preferred-color boost, so nothing direction-specific reorders results.
    pub fn new(cfg: &RetrievalConfig, neutrals: &BTreeSet<String>, direction: &Direction, rng_seed: u64) -> Self {
        Self {
            preferred_colors: if direction.enabled {
                direction.preferred_colors.clone()
            } else {
                BTreeSet::new()
            },
            neutrals: neutrals.clone(),
            preferred_multiplier: cfg.preferred_multiplier,
            neutral_multiplier: cfg.neutral_multiplier,
            noise_low: cfg.noise_low,
            noise_high: cfg.noise_high,
            rng_seed,
            rotation: None,
        }
    }

    /// Multipliers of 1 and no noise.
    pub fn identity() -> Self {
        Self {
            preferred_colors: BTreeSet::new(),
            neutrals: BTreeSet::new(),
            preferred_multiplier: 1.0,
            neutral_multiplier: 1.0,
            noise_low: 1.0,
            noise_high: 1.0,
            rng_seed: 0,
            rotation: None,
        }
    }

    pub fn color_multiplier(&self, color: &str) -> f64 {
        if self.preferred_colors.contains(color) {
            self.preferred_multiplier
        } else if self.neutrals.contains(color) {
            self.neutral_multiplier
        } else {
            1.0
        }
    }

    fn noise(&self, rng: &mut impl Rng) -> f64 {
        if self.noise_low < self.noise_high {
            rng.gen_range(self.noise_low..self.noise_high)
        } else {
            self.noise_low
        }
    }
}

/// Seed of the noise stream for one (direction, slot) retrieval.
pub fn stream_seed(request_seed: u64, direction_index: usize, slot: Category) -> u64 {
    mix64(request_seed ^ mix64(((direction_index as u64 + 1) << 8) | (slot.index() as u64 + 1)))
}

/// Scales each distance by its color multiplier, rotation multiplier, and one
/// noise draw (taken in input order), then re-sorts by (distance, id).
pub fn rerank_with_color_and_noise(
    results: &[ScoredId],
    catalog: &Catalog,
    policy: &RerankPolicy,
    rng: &mut impl Rng,
) -> Vec<ScoredId> {
    let mut out: Vec<ScoredId> = results
        .iter()
        .map(|r| {
            let color = catalog.get(&r.id).map(|i| i.color.as_str()).unwrap_or("");
            let rotation = policy.rotation.as_ref().map_or(1.0, |q| q.multiplier(&r.id));
            let noise = policy.noise(rng);
            ScoredId {
                id: r.id.clone(),
                distance: r.distance * policy.color_multiplier(color) * rotation * noise,
            }
        })
        .collect();
    out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.id.cmp(&b.id)));
    out
}

/// Drops layers more than `tau` lighter than the top they go over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerFilter {
    pub top_weight: f64,
    pub tau: f64,
}

impl LayerFilter {
    pub fn admits(&self, layer: &Item) -> bool {
        layer
            .material_weight
            .is_none_or(|w| layer_compatible(w, self.top_weight, self.tau))
    }
}

/// Read-only inputs shared by all slot retrievals of one request.
#[derive(Clone, Copy)]
pub struct RetrievalContext<'a> {
    pub index: &'a AnnIndex,
    pub catalog: &'a Catalog,
    pub provider: &'a dyn EmbeddingProvider,
    pub config: &'a RetrievalConfig,
    /// `None` skips the occasion filter.
    pub occasion: Option<&'a OccasionProfile>,
}

pub fn retrieve_slot_candidates<'a>(
    ctx: &RetrievalContext<'a>,
    anchor: &Item,
    slot: Category,
    direction: &Direction,
    exclusions: &HashSet<String>,
    policy: &RerankPolicy,
    layer_filter: Option<LayerFilter>,
) -> Result<Vec<&'a Item>> {
    let query = build_slot_query(anchor, slot, direction, &ctx.config.slot_hints, ctx.config.fetch_limit, ctx.provider)?;
    let mut excluded = exclusions.clone();
    excluded.insert(anchor.id.clone());
    let hits = ctx.index.search(&SearchRequest {
        query: query.vector,
        category: slot,
        exclusions: excluded,
        limit: query.fetch_limit,
    });
    let filtered = match ctx.occasion {
        Some(o) => filter_by_occasion(&hits, ctx.catalog, o),
        None => hits,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(policy.rng_seed);
    let ranked = rerank_with_color_and_noise(&filtered, ctx.catalog, policy, &mut rng);
    Ok(ranked
        .iter()
        .filter_map(|r| ctx.catalog.get(&r.id))
        .filter(|item| slot != Category::Layer || layer_filter.is_none_or(|f| f.admits(item)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EngineConfig;
    use crate::embedding::{SyntheticProvider, EMBEDDING_DIM};

    fn item(id: &str, color: &str) -> Item {
        Item {
            id: id.into(),
            name: String::new(),
            category: Category::Bottom,
            color: color.into(),
            material: String::new(),
            style_tags: vec!["classic".into()],
            occasion_tags: Default::default(),
            embedding: Vector::basis(EMBEDDING_DIM, 0),
            image_embedding: None,
            text_embedding: None,
            material_weight: None,
        }
    }

    #[test]
    fn query_text_has_every_part() {
        let cfg = EngineConfig::default();
        let provider = SyntheticProvider::new(1);
        let mut anchor = item("a", "gray");
        anchor.category = Category::Top;
        let q = build_slot_query(&anchor, Category::Bottom, &cfg.directions[0], &cfg.retrieval.slot_hints, 24, &provider)
            .unwrap();
        assert_eq!(q.text, "gray classic women's skirt, jeans, trousers classic timeless polished");
        let again =
            build_slot_query(&anchor, Category::Bottom, &cfg.directions[0], &cfg.retrieval.slot_hints, 24, &provider)
                .unwrap();
        assert_eq!(q, again);
        assert!(build_slot_query(&anchor, Category::Top, &cfg.directions[0], &cfg.retrieval.slot_hints, 24, &provider)
            .is_err());
    }

    #[test]
    fn identity_policy_keeps_order() {
        let catalog = Catalog::from_items([item("b", "red"), item("a", "black")]).unwrap();
        let input = vec![
            ScoredId { id: "b".into(), distance: 0.1 },
            ScoredId { id: "a".into(), distance: 0.2 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(rerank_with_color_and_noise(&input, &catalog, &RerankPolicy::identity(), &mut rng), input);
    }

    #[test]
    fn preferred_color_wins_a_tie() {
        let catalog = Catalog::from_items([item("a", "gray"), item("b", "red")]).unwrap();
        let mut policy = RerankPolicy::identity();
        policy.preferred_colors.insert("red".into());
        policy.preferred_multiplier = 0.85;
        let input = vec![
            ScoredId { id: "a".into(), distance: 0.4 },
            ScoredId { id: "b".into(), distance: 0.4 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = rerank_with_color_and_noise(&input, &catalog, &policy, &mut rng);
        assert_eq!(out[0].id, "b");
        assert!((out[0].distance - 0.34).abs() < 1e-15);
    }

    #[test]
    fn preferred_beats_neutral_when_both_apply() {
        let mut policy = RerankPolicy::identity();
        policy.preferred_colors.insert("black".into());
        policy.neutrals.insert("black".into());
        policy.preferred_multiplier = 0.85;
        policy.neutral_multiplier = 0.9;
        assert_eq!(policy.color_multiplier("black"), 0.85);
    }

    #[test]
    fn rotation_penalizes_queued_items() {
        let catalog = Catalog::from_items([item("a", "gray")]).unwrap();
        let mut policy = RerankPolicy::identity();
        policy.rotation = Some(crate::personalization::touch_rotation(&RotationQueue::default(), ["a"]));
        let input = vec![ScoredId { id: "a".into(), distance: 0.5 }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = rerank_with_color_and_noise(&input, &catalog, &policy, &mut rng);
        assert!((out[0].distance - 0.55).abs() < 1e-15);
    }

    #[test]
    fn stream_seeds_differ_by_slot_and_direction() {
        let a = stream_seed(7, 0, Category::Bottom);
        assert_ne!(a, stream_seed(7, 1, Category::Bottom));
        assert_ne!(a, stream_seed(7, 0, Category::Shoes));
        assert_eq!(a, stream_seed(7, 0, Category::Bottom));
    }
}
