//! Combinatorial outfit construction and per-direction selection.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ann::AnnIndex;
use crate::catalog::{Catalog, Category, Item};
use crate::config::EngineConfig;
use crate::embedding::{cosine, EmbeddingProvider};
use crate::personalization::{RotationQueue, TasteProfile};
use crate::retrieval::{retrieve_slot_candidates, stream_seed, LayerFilter, RerankPolicy, RetrievalContext};
use crate::scoring::{intent_vector, Direction, DirectionName, IntentVector, Outfit, ScoreBreakdown, Scorer};
use crate::semantics::{layer_compatible, OccasionProfile};
use crate::{Error, Result};

/// Required and optional slots for an anchor of the given category.
pub fn slot_layout(anchor: Category) -> (Vec<Category>, Vec<Category>) {
    use Category::*;
    match anchor {
        Top => (vec![Bottom, Shoes], vec![Layer, Accessory]),
        Bottom => (vec![Top, Shoes], vec![Layer, Accessory]),
        Shoes => (vec![Top, Bottom], vec![Layer, Accessory]),
        Dress => (vec![Shoes], vec![Layer, Accessory]),
        Layer => (vec![Top, Bottom, Shoes], vec![Accessory]),
        Accessory => (vec![Top, Bottom, Shoes], vec![Layer]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub anchor_id: String,
    pub occasion: String,
    #[serde(default)]
    pub mood: Option<String>,
    pub seed: u64,
    pub top_k_per_slot: usize,
    pub candidate_cap: usize,
}

impl GenerationRequest {
    pub fn new(anchor_id: impl Into<String>, occasion: impl Into<String>, seed: u64) -> Self {
        Self {
            anchor_id: anchor_id.into(),
            occasion: occasion.into(),
            mood: None,
            seed,
            top_k_per_slot: 3,
            candidate_cap: 8,
        }
    }
}

/// One slot assignment drawn from the per-slot candidate lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination<'a> {
    pub slots: BTreeMap<Category, &'a Item>,
    /// Sum of the 0-based retrieval ranks of the chosen items.
    pub rank_sum: usize,
}

impl Combination<'_> {
    fn ids(&self) -> Vec<&str> {
        self.slots.values().map(|i| i.id.as_str()).collect()
    }
}

fn order_key_cmp(a: &Combination<'_>, b: &Combination<'_>) -> std::cmp::Ordering {
    a.rank_sum.cmp(&b.rank_sum).then_with(|| a.ids().cmp(&b.ids()))
}

/// Cross product of the top `top_k` candidates of each slot that has any.
/// Combinations failing `admissible` are dropped; the rest are ordered by
/// (rank_sum, ids) and truncated to `cap`.
pub fn generate_candidates<'a>(
    per_slot: &BTreeMap<Category, Vec<&'a Item>>,
    required: &[Category],
    top_k: usize,
    cap: usize,
    admissible: impl Fn(&Combination<'a>) -> bool,
) -> Result<Vec<Combination<'a>>> {
    for &slot in required {
        if per_slot.get(&slot).is_none_or(Vec::is_empty) {
            return Err(Error::UnfillableSlot(slot));
        }
    }
    let mut combos = vec![Combination {
        slots: BTreeMap::new(),
        rank_sum: 0,
    }];
    for (&slot, items) in per_slot {
        if items.is_empty() {
            continue;
        }
        let mut next = Vec::with_capacity(combos.len() * top_k.min(items.len()));
        for combo in &combos {
            for (rank, &item) in items.iter().take(top_k).enumerate() {
                let mut c = combo.clone();
                c.slots.insert(slot, item);
                c.rank_sum += rank;
                next.push(c);
            }
        }
        combos = next;
    }
    combos.retain(|c| !c.slots.is_empty() && admissible(c));
    combos.sort_by(order_key_cmp);
    combos.truncate(cap);
    Ok(combos)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutfitCandidate {
    pub anchor: Item,
    pub slots: BTreeMap<Category, Item>,
    pub direction: DirectionName,
    pub breakdown: ScoreBreakdown,
    pub rank_sum: usize,
}

impl OutfitCandidate {
    /// Non-anchor item ids in slot order.
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.slots.values().map(|i| i.id.as_str())
    }

    pub fn items(&self) -> impl Iterator<Item = &Item> {
        std::iter::once(&self.anchor).chain(self.slots.values())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub direction: DirectionName,
    pub outfit: Option<OutfitCandidate>,
    /// Required slot that could not be filled, when `outfit` is `None`.
    pub gap: Option<Category>,
    pub candidates_scored: usize,
    pub candidate_totals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutput {
    pub anchor_id: String,
    pub occasion: String,
    pub seed: u64,
    /// `cos(intent, e_anchor)`; 1 for a user without taste.
    pub intent_anchor_cosine: f64,
    pub directions: Vec<DirectionResult>,
}

impl GenerationOutput {
    pub fn outfits(&self) -> impl Iterator<Item = &OutfitCandidate> {
        self.directions.iter().filter_map(|d| d.outfit.as_ref())
    }

    pub fn has_gap(&self) -> bool {
        self.directions.iter().any(|d| d.gap.is_some())
    }
}

/// Everything a generation reads. Nothing in here is mutated.
#[derive(Clone, Copy)]
pub struct GenerationContext<'a> {
    pub catalog: &'a Catalog,
    pub index: &'a AnnIndex,
    pub provider: &'a dyn EmbeddingProvider,
    pub config: &'a EngineConfig,
    pub occasion: &'a OccasionProfile,
    pub taste: &'a TasteProfile,
    pub rotation: Option<&'a RotationQueue>,
}

fn layer_ok(config: &EngineConfig, anchor: &Item, slots: &BTreeMap<Category, &Item>) -> bool {
    if !config.features.layer_compatibility {
        return true;
    }
    let pick = |cat: Category| {
        if anchor.category == cat {
            Some(anchor)
        } else {
            slots.get(&cat).copied()
        }
    };
    match (pick(Category::Layer), pick(Category::Top)) {
        (Some(layer), Some(top)) => match (layer.material_weight, top.material_weight) {
            (Some(wl), Some(wt)) => layer_compatible(wl, wt, config.material.tau),
            _ => true,
        },
        _ => true,
    }
}

/// Highest total; ties go to the lower (rank_sum, ids).
fn best<'s, 'a>(scored: &'s [(Combination<'a>, ScoreBreakdown)]) -> Option<&'s (Combination<'a>, ScoreBreakdown)> {
    scored.iter().min_by(|a, b| {
        b.1.total
            .total_cmp(&a.1.total)
            .then_with(|| order_key_cmp(&a.0, &b.0))
    })
}

fn owned(anchor: &Item, combo: &Combination<'_>, direction: DirectionName, breakdown: ScoreBreakdown) -> OutfitCandidate {
    OutfitCandidate {
        anchor: anchor.clone(),
        slots: combo.slots.iter().map(|(&k, &v)| (k, v.clone())).collect(),
        direction,
        breakdown,
        rank_sum: combo.rank_sum,
    }
}

fn intent_diagnostic(anchor: &Item, intent: &IntentVector) -> f64 {
    cosine(&intent.vector, &anchor.embedding).unwrap_or(0.0)
}

/// Scores and selects one outfit per direction. `fill` supplies the ordered
/// candidate list for (direction index, direction, slot, exclusions).
fn run_directions<'a, F>(
    ctx: &GenerationContext<'a>,
    req: &GenerationRequest,
    anchor: &'a Item,
    mut fill: F,
) -> Result<GenerationOutput>
where
    F: FnMut(usize, &Direction, Category, &HashSet<String>) -> Result<Vec<&'a Item>>,
{
    if req.top_k_per_slot < 1 || req.candidate_cap < 1 {
        return Err(Error::Config("top_k_per_slot and candidate_cap must be >= 1".into()));
    }
    let cfg = ctx.config;
    let scorer = Scorer::new(&cfg.scoring, &cfg.palette);
    let intent = intent_vector(anchor, ctx.taste, cfg.scoring.gamma, cfg.scoring.delta);
    let (required, optional) = slot_layout(anchor.category);

    let mut exclusions: HashSet<String> = HashSet::from([anchor.id.clone()]);
    let mut directions = Vec::with_capacity(cfg.directions.len());
    for (d_idx, direction) in cfg.directions.iter().enumerate() {
        let mut per_slot: BTreeMap<Category, Vec<&'a Item>> = BTreeMap::new();
        for &slot in required.iter().chain(&optional) {
            per_slot.insert(slot, fill(d_idx, direction, slot, &exclusions)?);
        }
        let admissible = |c: &Combination<'a>| layer_ok(cfg, anchor, &c.slots);
        let mut attempt = generate_candidates(&per_slot, &required, req.top_k_per_slot, req.candidate_cap, admissible);
        // Every optional layer clashed with the top: go without a layer.
        if matches!(&attempt, Ok(c) if c.is_empty()) && optional.contains(&Category::Layer) {
            per_slot.remove(&Category::Layer);
            attempt = generate_candidates(&per_slot, &required, req.top_k_per_slot, req.candidate_cap, admissible);
        }
        let combos = match attempt {
            Ok(c) => c,
            Err(Error::UnfillableSlot(slot)) => {
                directions.push(DirectionResult {
                    direction: direction.name,
                    outfit: None,
                    gap: Some(slot),
                    candidates_scored: 0,
                    candidate_totals: Vec::new(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let scored = combos
            .into_iter()
            .map(|c| {
                let b = scorer.total_score(&Outfit::new(anchor, c.slots.clone()), &intent, direction)?;
                Ok((c, b))
            })
            .collect::<Result<Vec<_>>>()?;
        let outfit = best(&scored).map(|(c, b)| owned(anchor, c, direction.name, b.clone()));
        if let Some(o) = &outfit {
            exclusions.extend(o.item_ids().map(String::from));
        }
        directions.push(DirectionResult {
            direction: direction.name,
            // Only a layer anchor with no compatible top can get here.
            gap: if outfit.is_none() { Some(Category::Top) } else { None },
            outfit,
            candidates_scored: scored.len(),
            candidate_totals: scored.iter().map(|(_, b)| b.total).collect(),
        });
    }
    Ok(GenerationOutput {
        anchor_id: anchor.id.clone(),
        occasion: req.occasion.clone(),
        seed: req.seed,
        intent_anchor_cosine: intent_diagnostic(anchor, &intent),
        directions,
    })
}

/// Classic, Trendy, Bold in configuration order, each drawing from what the
/// previous directions left.
pub fn generate_three_outfits(ctx: &GenerationContext<'_>, req: &GenerationRequest) -> Result<GenerationOutput> {
    let anchor = ctx
        .catalog
        .get(&req.anchor_id)
        .ok_or_else(|| Error::UnknownItem(req.anchor_id.clone()))?;
    let cfg = ctx.config;
    let rctx = RetrievalContext {
        index: ctx.index,
        catalog: ctx.catalog,
        provider: ctx.provider,
        config: &cfg.retrieval,
        occasion: cfg.features.occasion_filter.then_some(ctx.occasion),
    };
    let layer_filter = match (anchor.category, anchor.material_weight) {
        (Category::Top, Some(w)) if cfg.features.layer_compatibility => Some(LayerFilter {
            top_weight: w,
            tau: cfg.material.tau,
        }),
        _ => None,
    };
    run_directions(ctx, req, anchor, |d_idx, direction, slot, exclusions| {
        let mut policy = RerankPolicy::new(
            &cfg.retrieval,
            &cfg.palette.neutrals,
            direction,
            stream_seed(req.seed, d_idx, slot),
        );
        policy.rotation = ctx.rotation.cloned();
        retrieve_slot_candidates(&rctx, anchor, slot, direction, exclusions, &policy, layer_filter)
    })
}

/// Baseline: one uniform draw per slot from the right category, ignoring
/// similarity, scored by the same objective. There is nothing to select
/// between, so `k` and the cap are both 1. Never touches the index.
pub fn random_three_outfits(ctx: &GenerationContext<'_>, req: &GenerationRequest) -> Result<GenerationOutput> {
    let req = &GenerationRequest {
        top_k_per_slot: 1,
        candidate_cap: 1,
        ..req.clone()
    };
    let anchor = ctx
        .catalog
        .get(&req.anchor_id)
        .ok_or_else(|| Error::UnknownItem(req.anchor_id.clone()))?;
    run_directions(ctx, req, anchor, |d_idx, _direction, slot, exclusions| {
        let mut pool: Vec<&Item> = ctx
            .catalog
            .by_category(slot)
            .filter(|i| !exclusions.contains(&i.id))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(req.seed, d_idx, slot));
        pool.shuffle(&mut rng);
        Ok(pool)
    })
}
