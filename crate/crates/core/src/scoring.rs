//! Composite outfit objective.
//!
//! ```text
//! S = S_sim + B_dir + B_harm - P_color - P_form - P_occ - P_div
//! ```
//!
//! with `S = -1` whenever a non-anchor item repeats the anchor's non-neutral
//! color. Similarity is measured against the intent vector (anchor embedding
//! shifted by taste) over the non-anchor slots only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{Category, Item};
use crate::config::{ColorPalette, ScoringConfig, SlotWeights};
use crate::embedding::{cosine, Vector};
use crate::personalization::TasteProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Classic,
    Trendy,
    Bold,
}

impl DirectionName {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionName::Classic => "classic",
            DirectionName::Trendy => "trendy",
            DirectionName::Bold => "bold",
        }
    }
}

impl fmt::Display for DirectionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorPolicy {
    /// Reward the share of neutral-colored items.
    Neutrals,
    /// At most two non-neutral color families.
    TwoTone,
    /// At least two distinct non-neutral color families.
    Contrast,
}

/// A style direction. `preferred_colors` drive the retrieval rerank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionConfig {
    pub name: DirectionName,
    pub style_tags: BTreeSet<String>,
    pub color_policy: ColorPolicy,
    pub query_modifier: String,
    pub preferred_colors: BTreeSet<String>,
    pub enabled: bool,
}

pub type Direction = DirectionConfig;

impl DirectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.style_tags.is_empty() {
            return Err(Error::Config(format!("direction {}: no style tags", self.name)));
        }
        if self.query_modifier.trim().is_empty() {
            return Err(Error::Config(format!("direction {}: empty modifier", self.name)));
        }
        Ok(())
    }
}

/// An anchor plus one item per filled slot.
#[derive(Debug, Clone)]
pub struct Outfit<'a> {
    pub anchor: &'a Item,
    pub slots: BTreeMap<Category, &'a Item>,
}

impl<'a> Outfit<'a> {
    pub fn new(anchor: &'a Item, slots: BTreeMap<Category, &'a Item>) -> Self {
        Self { anchor, slots }
    }

    /// Anchor first, then slots in category order.
    pub fn items(&self) -> impl Iterator<Item = &'a Item> + '_ {
        std::iter::once(self.anchor).chain(self.slots.values().copied())
    }

    pub fn len(&self) -> usize {
        1 + self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentVector {
    pub vector: Vector,
    pub gamma: f64,
    pub delta: f64,
}

/// `e_anchor + gamma * t_like - delta * t_dislike`, not renormalized.
pub fn intent_vector(anchor: &Item, taste: &TasteProfile, gamma: f64, delta: f64) -> IntentVector {
    let mut v = anchor.embedding.clone();
    v.add_scaled(gamma, &taste.t_like);
    v.add_scaled(-delta, &taste.t_dislike);
    IntentVector {
        vector: v,
        gamma,
        delta,
    }
}

fn cos_or_zero(a: &Vector, b: &Vector) -> f64 {
    cosine(a, b).unwrap_or(0.0)
}

/// Slot-weighted cosine to the intent vector plus the bottom/shoe cross term.
/// Empty slots contribute nothing; weights are not renormalized.
pub fn similarity_score(slots: &BTreeMap<Category, &Item>, intent: &IntentVector, weights: &SlotWeights) -> Result<f64> {
    if slots.is_empty() {
        return Err(Error::EmptyOutfit);
    }
    let mut s: f64 = slots
        .iter()
        .map(|(&slot, item)| weights.weight(slot) * cos_or_zero(&intent.vector, &item.embedding))
        .sum();
    if let (Some(b), Some(sh)) = (slots.get(&Category::Bottom), slots.get(&Category::Shoes)) {
        s += weights.bottom_shoe_cross * cos_or_zero(&b.embedding, &sh.embedding);
    }
    Ok(s)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub similarity: f64,
    pub direction_bonus: f64,
    pub harmony_bonus: f64,
    pub color_penalty: f64,
    pub formality_penalty: f64,
    pub occasion_penalty: f64,
    pub diversity_penalty: f64,
    pub hard_violation: bool,
    pub total: f64,
    pub n_non_neutral: usize,
    pub n_statement: usize,
    pub formality_gap: u8,
}

impl ScoreBreakdown {
    /// Total implied by the components (ignores the violation override).
    pub fn component_sum(&self) -> f64 {
        self.similarity + self.direction_bonus + self.harmony_bonus
            - (self.color_penalty + self.formality_penalty + self.occasion_penalty + self.diversity_penalty)
    }
}

/// Penalty-side pieces of the breakdown.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Penalties {
    pub harmony_bonus: f64,
    pub color_penalty: f64,
    pub formality_penalty: f64,
    pub occasion_penalty: f64,
    pub diversity_penalty: f64,
    pub hard_violation: bool,
    pub n_non_neutral: usize,
    pub n_statement: usize,
    pub formality_gap: u8,
}

/// Scoring rules bound to one configuration.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    pub config: &'a ScoringConfig,
    pub palette: &'a ColorPalette,
}

impl<'a> Scorer<'a> {
    pub fn new(config: &'a ScoringConfig, palette: &'a ColorPalette) -> Self {
        Self { config, palette }
    }

    /// 0 casual, 1 neutral, 2 formal. Matching both lists, or neither, is 1.
    pub fn formality_level(&self, item: &Item) -> u8 {
        let matches = |keywords: &[String]| {
            item.keyword_tokens()
                .any(|tok| keywords.iter().any(|k| tok.starts_with(k.as_str())))
        };
        match (matches(&self.config.formal_keywords), matches(&self.config.casual_keywords)) {
            (true, false) => 2,
            (false, true) => 0,
            _ => 1,
        }
    }

    pub fn is_statement(&self, item: &Item) -> bool {
        item.style_tags.iter().any(|t| self.config.statement_tags.contains(t))
    }

    fn non_neutral_colors<'o>(&self, outfit: &'o Outfit<'_>) -> BTreeSet<&'o str> {
        outfit
            .items()
            .map(|i| i.color.as_str())
            .filter(|c| !self.palette.is_neutral(c))
            .collect()
    }

    fn non_neutral_families<'o>(&'o self, outfit: &'o Outfit<'_>) -> BTreeSet<&'o str> {
        self.non_neutral_colors(outfit)
            .into_iter()
            .map(|c| self.palette.family(c))
            .collect()
    }

    pub fn hard_violation(&self, outfit: &Outfit<'_>) -> bool {
        let anchor_color = outfit.anchor.color.as_str();
        !self.palette.is_neutral(anchor_color)
            && outfit.slots.values().any(|i| i.color == anchor_color)
    }

    /// `max * (tag_share * tag_fraction + color_share * color_adherence)`,
    /// clamped to `[0, max]`; zero when the direction is disabled.
    pub fn direction_bonus(&self, outfit: &Outfit<'_>, direction: &Direction) -> f64 {
        if !direction.enabled {
            return 0.0;
        }
        let n = outfit.len() as f64;
        let tagged = outfit
            .items()
            .filter(|i| i.style_tags.iter().any(|t| direction.style_tags.contains(t)))
            .count() as f64;
        let tag_fraction = tagged / n;
        let adherence = match direction.color_policy {
            ColorPolicy::Neutrals => {
                outfit.items().filter(|i| self.palette.is_neutral(&i.color)).count() as f64 / n
            }
            ColorPolicy::TwoTone => f64::from(self.non_neutral_families(outfit).len() <= 2),
            ColorPolicy::Contrast => f64::from(self.non_neutral_families(outfit).len() >= 2),
        };
        let c = self.config;
        (c.direction_max_bonus * (c.direction_tag_share * tag_fraction + c.direction_color_share * adherence))
            .clamp(0.0, c.direction_max_bonus)
    }

    pub fn constraint_penalties(&self, outfit: &Outfit<'_>) -> Penalties {
        let c = self.config;
        let n_non_neutral = self.non_neutral_colors(outfit).len();
        let color_penalty =
            c.color_clash_coefficient * n_non_neutral.saturating_sub(c.free_non_neutral_colors) as f64;

        let levels: Vec<u8> = outfit.items().map(|i| self.formality_level(i)).collect();
        let gap = levels.iter().max().unwrap() - levels.iter().min().unwrap();
        let formality_penalty = c.formality_coefficient * (gap as f64 - 1.0).max(0.0);

        // Items without occasion tags do not constrain the intersection.
        let mut tagged = outfit.items().filter(|i| !i.occasion_tags.is_empty());
        let occasion_penalty = match tagged.next() {
            None => 0.0,
            Some(first) => {
                let mut common: BTreeSet<&str> = first.occasion_tags.iter().map(String::as_str).collect();
                for item in tagged {
                    common.retain(|o| item.occasion_tags.contains(*o));
                }
                if common.is_empty() {
                    c.occasion_conflict_penalty
                } else {
                    0.0
                }
            }
        };

        let n_statement = outfit.items().filter(|i| self.is_statement(i)).count();
        let diversity_penalty = c.statement_coefficient * n_statement.saturating_sub(1) as f64;

        let families = self.non_neutral_families(outfit).len();
        let harmony_bonus = match families {
            0 | 1 => c.harmony_bonus,
            2 => 0.0,
            _ => -c.harmony_bonus,
        };

        Penalties {
            harmony_bonus,
            color_penalty,
            formality_penalty,
            occasion_penalty,
            diversity_penalty,
            hard_violation: self.hard_violation(outfit),
            n_non_neutral,
            n_statement,
            formality_gap: gap,
        }
    }

    pub fn total_score(&self, outfit: &Outfit<'_>, intent: &IntentVector, direction: &Direction) -> Result<ScoreBreakdown> {
        let similarity = similarity_score(&outfit.slots, intent, &self.config.slot_weights)?;
        let direction_bonus = self.direction_bonus(outfit, direction);
        let p = self.constraint_penalties(outfit);
        let mut b = ScoreBreakdown {
            similarity,
            direction_bonus,
            harmony_bonus: p.harmony_bonus,
            color_penalty: p.color_penalty,
            formality_penalty: p.formality_penalty,
            occasion_penalty: p.occasion_penalty,
            diversity_penalty: p.diversity_penalty,
            hard_violation: p.hard_violation,
            total: 0.0,
            n_non_neutral: p.n_non_neutral,
            n_statement: p.n_statement,
            formality_gap: p.formality_gap,
        };
        b.total = if b.hard_violation { -1.0 } else { b.component_sum() };
        Ok(b)
    }
}
