//! Engine configuration. Defaults live here; `config/default.toml` is the same
//! bundle in file form.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ann::IndexParams;
use crate::catalog::Category;
use crate::embedding::BlendWeights;
use crate::scoring::{ColorPolicy, DirectionConfig, DirectionName};
use crate::semantics::{MaterialConfig, OccasionConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub blend: BlendWeights,
    /// Seed of the synthetic text provider.
    pub synthetic_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub fetch_limit: usize,
    pub preferred_multiplier: f64,
    pub neutral_multiplier: f64,
    pub noise_low: f64,
    pub noise_high: f64,
    pub slot_hints: BTreeMap<Category, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotWeights {
    pub top: f64,
    pub bottom: f64,
    pub shoes: f64,
    pub layer: f64,
    pub accessory: f64,
    pub bottom_shoe_cross: f64,
}

impl SlotWeights {
    pub fn weight(&self, slot: Category) -> f64 {
        match slot {
            Category::Top => self.top,
            Category::Bottom => self.bottom,
            Category::Shoes => self.shoes,
            Category::Layer => self.layer,
            Category::Accessory => self.accessory,
            Category::Dress => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub slot_weights: SlotWeights,
    /// Intent weight on the liked-taste vector.
    pub gamma: f64,
    /// Intent weight on the disliked-taste vector.
    pub delta: f64,
    pub direction_max_bonus: f64,
    pub direction_tag_share: f64,
    pub direction_color_share: f64,
    pub color_clash_coefficient: f64,
    pub free_non_neutral_colors: usize,
    pub formality_coefficient: f64,
    pub occasion_conflict_penalty: f64,
    pub statement_coefficient: f64,
    pub harmony_bonus: f64,
    pub formal_keywords: Vec<String>,
    pub casual_keywords: Vec<String>,
    pub statement_tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorPalette {
    pub neutrals: BTreeSet<String>,
    /// Color name to family name. Colors missing here form their own family.
    pub families: BTreeMap<String, String>,
}

impl ColorPalette {
    pub fn is_neutral(&self, color: &str) -> bool {
        color.is_empty() || self.neutrals.contains(color)
    }

    pub fn family<'a>(&'a self, color: &'a str) -> &'a str {
        self.families.get(color).map(String::as_str).unwrap_or(color)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub top_k_per_slot: usize,
    pub candidate_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizationConfig {
    pub eta: f64,
    pub rotation_capacity: usize,
    pub rotation_multiplier: f64,
}

/// Pipeline stages that can be switched off for ablations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureToggles {
    pub occasion_filter: bool,
    pub layer_compatibility: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub embedding: EmbeddingConfig,
    pub index: IndexParams,
    pub features: FeatureToggles,
    pub occasions: BTreeMap<String, OccasionConfig>,
    pub material: MaterialConfig,
    pub palette: ColorPalette,
    pub retrieval: RetrievalConfig,
    pub scoring: ScoringConfig,
    /// Scored in this order; the order matters because of global exclusion.
    pub directions: Vec<DirectionConfig>,
    pub generator: GeneratorConfig,
    pub personalization: PersonalizationConfig,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn word_set(s: &str) -> BTreeSet<String> {
    s.split_whitespace().map(String::from).collect()
}

impl Default for EngineConfig {
    fn default() -> Self {
        let occasion = |vibe: &str, anti: &str, lambda: f64, unconditional: f64, keep: f64| OccasionConfig {
            vibe: vibe.into(),
            anti_vibe: anti.into(),
            lambda,
            unconditional_anti_weight: unconditional,
            keep_fraction: keep,
            min_floor: 3,
        };
        let occasions = BTreeMap::from([
            (
                "work".to_string(),
                occasion(
                    "professional office business conservative modest polished refined tailored \
                     structured classic understated elegant minimal crisp formal smart sophisticated \
                     neat timeless collared muted trousers blazer",
                    "sexy revealing provocative clubbing nightlife party halter tank top cami strappy \
                     sequined metallic neon mini skirt crop top bodycon sheer cutout glitter festival \
                     ripped",
                    3.0,
                    2.0,
                    0.85,
                ),
            ),
            (
                "going-out".to_string(),
                occasion(
                    "night out party evening cocktail date dinner glamorous statement sequined \
                     metallic bold chic sleek sexy edgy dressy glitter drinks dancing club trendy \
                     romantic",
                    "office corporate conservative frumpy sporty athletic gym workout hoodie joggers \
                     sweatpants loungewear pajamas hiking utilitarian dowdy plain baggy fleece \
                     orthopedic",
                    3.0,
                    0.0,
                    0.85,
                ),
            ),
            (
                "smart-casual".to_string(),
                occasion(
                    "smart casual polished relaxed refined chic neat tailored effortless minimal \
                     versatile brunch gallery weekend lunch clean crisp preppy elegant modern \
                     understated",
                    "sloppy gym workout athletic sweatpants ripped distressed clubbing sequined sexy \
                     revealing costume pajamas beachwear grungy glitter neon festival hoodie \
                     flip-flops",
                    3.0,
                    0.0,
                    0.75,
                ),
            ),
            (
                "casual".to_string(),
                occasion(
                    "casual relaxed comfortable easygoing everyday weekend laid-back cozy simple \
                     denim cotton streetwear sporty errands coffee park soft practical effortless \
                     lounge",
                    "formal black-tie gown tuxedo ceremonial stiff ornate sequined ballroom corporate \
                     rigid uncomfortable overdressed pageant ballgown couture starched cufflinks \
                     brocade embellished",
                    1.0,
                    0.0,
                    0.70,
                ),
            ),
        ]);

        let neutrals = word_set("black white gray beige cream navy tan brown ivory charcoal khaki");
        let mut families: BTreeMap<String, String> = BTreeMap::new();
        for (family, colors) in [
            ("warm", "red orange coral rust mustard yellow"),
            ("cool", "blue cobalt teal turquoise green"),
            ("earth", "olive terracotta camel sage"),
            ("jewel", "emerald burgundy sapphire amethyst fuchsia purple plum"),
            ("pastel", "pink blush lavender lilac mint peach"),
        ] {
            for c in colors.split_whitespace() {
                families.insert(c.to_string(), family.to_string());
            }
        }
        for c in &neutrals {
            families.insert(c.clone(), "neutral".to_string());
        }

        let slot_hints = BTreeMap::from([
            (Category::Top, "women's blouse, shirt, tee, sweater top".to_string()),
            (Category::Bottom, "women's skirt, jeans, trousers".to_string()),
            (Category::Shoes, "shoes sneakers loafers heels boots".to_string()),
            (Category::Dress, "dress midi maxi slip".to_string()),
            (Category::Layer, "jacket blazer coat cardigan layer".to_string()),
            (Category::Accessory, "bag belt scarf jewelry accessory".to_string()),
        ]);

        let directions = vec![
            DirectionConfig {
                name: DirectionName::Classic,
                style_tags: word_set("classic minimal elegant preppy"),
                color_policy: ColorPolicy::Neutrals,
                query_modifier: "classic timeless polished".into(),
                preferred_colors: neutrals.clone(),
                enabled: true,
            },
            DirectionConfig {
                name: DirectionName::Trendy,
                style_tags: word_set("streetwear chic statement casual"),
                color_policy: ColorPolicy::TwoTone,
                query_modifier: "modern trendy chic streetwear".into(),
                preferred_colors: word_set("olive blush camel sage mint lavender"),
                enabled: true,
            },
            DirectionConfig {
                name: DirectionName::Bold,
                style_tags: word_set("edgy statement romantic bohemian"),
                color_policy: ColorPolicy::Contrast,
                query_modifier: "daring bold edgy statement".into(),
                preferred_colors: word_set("red cobalt emerald fuchsia yellow orange"),
                enabled: true,
            },
        ];

        Self {
            embedding: EmbeddingConfig {
                blend: BlendWeights::default(),
                synthetic_seed: 20_240_617,
            },
            index: IndexParams::default(),
            features: FeatureToggles {
                occasion_filter: true,
                layer_compatibility: true,
            },
            occasions,
            material: MaterialConfig {
                heavy: "thick heavy warm winter chunky wool cashmere tweed leather padded quilted \
                        knit fleece insulated dense lined structured shearling corduroy"
                    .into(),
                light: "thin light airy breathable summer chiffon silk linen sheer lightweight \
                        flowy delicate satin mesh gauzy floaty breezy"
                    .into(),
                tau: 0.15,
                weight_keywords: words(
                    "heavy chunky thick padded quilted insulated lined structured knit \
                     light lightweight sheer airy thin flowy breezy",
                ),
            },
            palette: ColorPalette { neutrals, families },
            retrieval: RetrievalConfig {
                fetch_limit: 24,
                preferred_multiplier: 0.85,
                neutral_multiplier: 0.90,
                noise_low: 0.95,
                noise_high: 1.05,
                slot_hints,
            },
            scoring: ScoringConfig {
                slot_weights: SlotWeights {
                    top: 0.10,
                    bottom: 0.35,
                    shoes: 0.25,
                    layer: 0.10,
                    accessory: 0.15,
                    bottom_shoe_cross: 0.05,
                },
                gamma: 0.15,
                delta: 0.05,
                direction_max_bonus: 0.3,
                direction_tag_share: 0.5,
                direction_color_share: 0.5,
                color_clash_coefficient: 0.1,
                free_non_neutral_colors: 2,
                formality_coefficient: 0.2,
                occasion_conflict_penalty: 0.15,
                statement_coefficient: 0.1,
                harmony_bonus: 0.05,
                formal_keywords: words("blazer suit oxford loafer heel trouser silk tailored"),
                casual_keywords: words("sneaker hoodie jogger gym athletic tee workout"),
                statement_tags: ["statement", "sequined", "metallic", "neon", "animal print"]
                    .into_iter()
                    .map(String::from)
                    .collect(),
            },
            directions,
            generator: GeneratorConfig {
                top_k_per_slot: 3,
                candidate_cap: 8,
            },
            personalization: PersonalizationConfig {
                eta: 0.2,
                rotation_capacity: 20,
                rotation_multiplier: 1.1,
            },
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes to TOML")
    }

    /// Hex SHA-256 prefix of the canonical JSON form. Two engines with equal
    /// hashes produce identical outputs for identical requests and catalogs.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("configuration serializes to JSON");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding.blend.validate()?;
        self.index.validate()?;
        if self.occasions.is_empty() {
            return Err(Error::Config("no occasions configured".into()));
        }
        for (name, o) in &self.occasions {
            o.validate(name)?;
        }
        let r = &self.retrieval;
        if r.fetch_limit < 1 {
            return Err(Error::Config("fetch_limit must be >= 1".into()));
        }
        for m in [r.preferred_multiplier, r.neutral_multiplier] {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::Config("color multipliers must be in (0, 1]".into()));
            }
        }
        if !(r.noise_low > 0.0 && r.noise_low <= r.noise_high) {
            return Err(Error::Config("noise bounds must satisfy 0 < low <= high".into()));
        }
        let w = &self.scoring.slot_weights;
        if [w.top, w.bottom, w.shoes, w.layer, w.accessory, w.bottom_shoe_cross]
            .iter()
            .any(|x| x.is_nan() || *x < 0.0)
        {
            return Err(Error::Config("slot weights must be >= 0".into()));
        }
        if self.scoring.gamma < 0.0 || self.scoring.delta < 0.0 {
            return Err(Error::Config("gamma and delta must be >= 0".into()));
        }
        if self.directions.is_empty() {
            return Err(Error::Config("no directions configured".into()));
        }
        for d in &self.directions {
            d.validate()?;
        }
        if self.generator.top_k_per_slot < 1 || self.generator.candidate_cap < 1 {
            return Err(Error::Config("top_k_per_slot and candidate_cap must be >= 1".into()));
        }
        let p = &self.personalization;
        if !(p.eta > 0.0 && p.eta <= 1.0) {
            return Err(Error::Config("eta must be in (0, 1]".into()));
        }
        if p.rotation_multiplier < 1.0 {
            return Err(Error::Config("rotation multiplier must be >= 1".into()));
        }
        Ok(())
    }
}
