//! Seeded synthetic catalogs.
//!
//! Attributes come from small fixed vocabularies whose words also appear in
//! the occasion, material and direction prose, so the engine's orderings show
//! up in the synthetic geometry. Each item gets a text embedding of its
//! description and a separate "image" embedding built from its color,
//! category, silhouette and an item-specific jitter, which is what lets the
//! blend ablation mean something.

use std::collections::{BTreeMap, BTreeSet};

use outfit_core::catalog::{Catalog, Category, Item};
use outfit_core::embedding::{
    blend_embedding, build_item_description, mix64, BlendWeights, EmbeddingProvider, SyntheticProvider, Vector,
};
use outfit_core::Result;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-category item counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition(pub BTreeMap<Category, usize>);

impl Composition {
    /// 230 tops, 170 bottoms, 140 shoes, 50 dresses, 30 accessories.
    pub fn reference() -> Self {
        Composition(BTreeMap::from([
            (Category::Top, 230),
            (Category::Bottom, 170),
            (Category::Shoes, 140),
            (Category::Dress, 50),
            (Category::Accessory, 30),
        ]))
    }

    pub fn empty() -> Self {
        Composition(BTreeMap::new())
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    /// Parses `top=230,bottom=170,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| outfit_core::Error::Config(format!("bad composition entry {part:?}")))?;
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| outfit_core::Error::Config(format!("bad count in {part:?}")))?;
            out.insert(k.parse()?, n);
        }
        Ok(Composition(out))
    }
}

pub const NEUTRAL_COLORS: &[&str] = &[
    "black", "white", "gray", "beige", "cream", "navy", "tan", "brown", "ivory", "charcoal", "khaki",
];

pub const ACCENT_COLORS: &[&str] = &[
    "red", "orange", "mustard", "cobalt", "teal", "olive", "camel", "emerald", "burgundy", "fuchsia", "blush",
    "lavender",
];

/// Tag groups; an item draws most of its tags from one group so that tags
/// co-occur the way real styling vocabularies do.
const TAG_GROUPS: &[&[&str]] = &[
    &["classic", "minimal", "elegant", "preppy", "polished", "tailored", "structured"],
    &["streetwear", "chic", "casual", "relaxed", "oversized", "cozy"],
    &["edgy", "statement", "romantic", "bohemian", "sexy", "strappy"],
    &["sporty", "workout", "relaxed", "casual", "fitted", "cozy"],
    &["sequined", "metallic", "party", "clubbing", "sexy", "statement"],
];

/// Occasion tags each tag group tends to carry.
const GROUP_OCCASIONS: &[&[&str]] = &[
    &["work", "smart-casual"],
    &["casual", "smart-casual"],
    &["going-out", "smart-casual"],
    &["casual"],
    &["going-out"],
];

/// Relative frequency of each tag group.
const GROUP_WEIGHTS: &[u32] = &[30, 25, 20, 15, 10];

const MATERIALS: &[&str] = &[
    "wool", "cashmere", "leather", "denim", "tweed", "cotton", "polyester", "linen", "silk", "chiffon", "satin",
    "jersey",
];

const WEIGHT_WORDS: &[&str] = &["chunky", "lightweight", "padded", "sheer", "structured", "airy", "knit", "thin"];

fn nouns(category: Category) -> &'static [&'static str] {
    match category {
        Category::Top => &["blouse", "tee", "sweater", "shirt", "cami", "tank", "turtleneck", "hoodie"],
        Category::Bottom => &["jeans", "trousers", "skirt", "joggers", "shorts", "culottes"],
        Category::Shoes => &["sneakers", "loafers", "heels", "boots", "sandals", "oxfords", "flats"],
        Category::Dress => &["midi dress", "slip dress", "maxi dress", "shirt dress", "sheath dress"],
        Category::Layer => &["blazer", "cardigan", "trench coat", "denim jacket", "puffer"],
        Category::Accessory => &["belt", "scarf", "tote", "necklace", "clutch", "cap"],
    }
}

const SILHOUETTES: &[&str] = &["fitted", "boxy", "flared", "straight", "cropped", "draped", "longline"];
const PATTERNS: &[&str] = &["solid", "striped", "floral", "plaid", "checked", "textured"];

/// Weight of the item-specific jitter in the image embedding, relative to
/// the unit-norm attribute part.
pub const IMAGE_JITTER: f64 = 1.0;

/// Seed offset that separates the image token space from the text one.
const IMAGE_SEED_SALT: u64 = 0x1A6E_0000_0000_0001;

/// Generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub composition: Composition,
    /// Seed of the text embedding provider; match the engine's.
    pub text_seed: u64,
    /// Probability that an item's color is neutral.
    pub neutral_share: f64,
}

impl SynthSpec {
    pub fn reference(seed: u64, text_seed: u64) -> Self {
        Self {
            seed,
            composition: Composition::reference(),
            text_seed,
            neutral_share: 0.6,
        }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn pick_group<R: Rng>(rng: &mut R) -> usize {
    let total: u32 = GROUP_WEIGHTS.iter().sum();
    let mut x = rng.gen_range(0..total);
    for (i, &w) in GROUP_WEIGHTS.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    GROUP_WEIGHTS.len() - 1
}

fn image_embedding(image: &SyntheticProvider, item: &Item, silhouette: &str, pattern: &str) -> Result<Vector> {
    let attrs = image.embed_text(&format!("{} {} {silhouette} {pattern}", item.color, item.category))?;
    let jitter = image.embed_text(&format!("item:{}", item.id))?;
    let mut v = attrs;
    v.add_scaled(IMAGE_JITTER, &jitter);
    v.normalized()
}

/// Items come out grouped by category in `Category` order, numbered per
/// category (`top-000`, `top-001`, ...).
pub fn synth_catalog(spec: &SynthSpec) -> Result<Catalog> {
    let text = SyntheticProvider::new(spec.text_seed);
    let image = SyntheticProvider::new(spec.text_seed ^ IMAGE_SEED_SALT);
    let mut items = Vec::with_capacity(spec.composition.total());
    for (&category, &count) in &spec.composition.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(spec.seed ^ (category.index() as u64 + 1)));
        for n in 0..count {
            let group = pick_group(&mut rng);
            let color = if rng.gen_bool(spec.neutral_share) {
                pick(&mut rng, NEUTRAL_COLORS)
            } else {
                pick(&mut rng, ACCENT_COLORS)
            };
            let mut tags: Vec<&str> = TAG_GROUPS[group].choose_multiple(&mut rng, 2).copied().collect();
            if rng.gen_bool(0.3) {
                let other = TAG_GROUPS[rng.gen_range(0..TAG_GROUPS.len())];
                let extra = pick(&mut rng, other);
                if !tags.contains(&extra) {
                    tags.push(extra);
                }
            }
            let mut occasions: BTreeSet<String> = GROUP_OCCASIONS[group].iter().map(|s| s.to_string()).collect();
            if rng.gen_bool(0.15) {
                occasions.insert(pick(&mut rng, &["work", "casual", "going-out", "smart-casual"]).to_string());
            }
            let material = pick(&mut rng, MATERIALS);
            let noun = pick(&mut rng, nouns(category));
            let silhouette = pick(&mut rng, SILHOUETTES);
            let pattern = pick(&mut rng, PATTERNS);
            let name = if rng.gen_bool(0.4) {
                format!("{} {color} {noun}", pick(&mut rng, WEIGHT_WORDS))
            } else {
                format!("{color} {material} {noun}")
            };
            let mut item = Item {
                id: format!("{category}-{n:03}"),
                name,
                category,
                color: color.to_string(),
                material: material.to_string(),
                style_tags: tags.into_iter().map(String::from).collect(),
                occasion_tags: occasions,
                embedding: Vector::zeros(0),
                image_embedding: None,
                text_embedding: None,
                material_weight: None,
            };
            let txt = text.embed_text(&build_item_description(&item))?;
            let img = image_embedding(&image, &item, silhouette, pattern)?;
            item.embedding = blend_embedding(&img, &txt, BlendWeights::default())?;
            item.image_embedding = Some(img);
            item.text_embedding = Some(txt);
            items.push(item);
        }
    }
    Catalog::from_items(items)
}
