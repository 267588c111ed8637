//! A built engine: prepared catalog, index, embedded occasion and material
//! prose, bound to one configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ann::{build_index, AnnIndex};
use crate::catalog::{Catalog, Category, Item};
use crate::config::EngineConfig;
use crate::embedding::{blend_embedding, EmbeddingProvider, SyntheticProvider};
use crate::generator::{
    generate_three_outfits, random_three_outfits, GenerationContext, GenerationOutput, GenerationRequest,
};
use crate::personalization::{RotationQueue, TasteProfile};
use crate::semantics::{material_weight, mood_score, MaterialContext, OccasionProfile};
use crate::{Error, Result};

pub struct Engine {
    config: EngineConfig,
    config_hash: String,
    provider: Arc<dyn EmbeddingProvider>,
    catalog: Catalog,
    index: AnnIndex,
    occasions: BTreeMap<String, OccasionProfile>,
    material: MaterialContext,
}

/// Per-item mood score of one generated outfit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodScore {
    pub item_id: String,
    pub score: f64,
}

impl Engine {
    /// Uses the synthetic provider seeded from the configuration.
    pub fn with_synthetic(config: EngineConfig, catalog: Catalog) -> Result<Engine> {
        let provider = Arc::new(SyntheticProvider::new(config.embedding.synthetic_seed));
        Engine::build(config, catalog, provider)
    }

    pub fn build(config: EngineConfig, catalog: Catalog, provider: Arc<dyn EmbeddingProvider>) -> Result<Engine> {
        config.validate()?;
        let material = MaterialContext::embed(&config.material, provider.as_ref())?;
        let occasions = config
            .occasions
            .iter()
            .map(|(name, o)| Ok((name.clone(), OccasionProfile::embed(name, o, provider.as_ref())?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let catalog = catalog.map_items(|item| prepare_item(&config, &material, provider.as_ref(), item))?;
        let index = build_index(&catalog, config.index)?;
        Ok(Engine {
            config_hash: config.hash(),
            config,
            provider,
            catalog,
            index,
            occasions,
            material,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn index(&self) -> &AnnIndex {
        &self.index
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn material(&self) -> &MaterialContext {
        &self.material
    }

    pub fn occasion(&self, name: &str) -> Result<&OccasionProfile> {
        self.occasions
            .get(name)
            .ok_or_else(|| Error::UnknownOccasion(name.to_string()))
    }

    pub fn occasion_names(&self) -> impl Iterator<Item = &str> {
        self.occasions.keys().map(String::as_str)
    }

    /// Request with the configured `k` and cap.
    pub fn request(&self, anchor_id: &str, occasion: &str, seed: u64) -> GenerationRequest {
        GenerationRequest {
            top_k_per_slot: self.config.generator.top_k_per_slot,
            candidate_cap: self.config.generator.candidate_cap,
            ..GenerationRequest::new(anchor_id, occasion, seed)
        }
    }

    fn context<'a>(
        &'a self,
        occasion: &'a OccasionProfile,
        taste: &'a TasteProfile,
        rotation: Option<&'a RotationQueue>,
    ) -> GenerationContext<'a> {
        GenerationContext {
            catalog: &self.catalog,
            index: &self.index,
            provider: self.provider.as_ref(),
            config: &self.config,
            occasion,
            taste,
            rotation,
        }
    }

    pub fn generate(
        &self,
        req: &GenerationRequest,
        taste: Option<&TasteProfile>,
        rotation: Option<&RotationQueue>,
    ) -> Result<GenerationOutput> {
        let occasion = self.occasion(&req.occasion)?;
        let zero = TasteProfile::new(self.config.personalization.eta);
        generate_three_outfits(&self.context(occasion, taste.unwrap_or(&zero), rotation), req)
    }

    pub fn generate_random(&self, req: &GenerationRequest) -> Result<GenerationOutput> {
        let occasion = self.occasion(&req.occasion)?;
        let zero = TasteProfile::new(self.config.personalization.eta);
        random_three_outfits(&self.context(occasion, &zero, None), req)
    }

    /// Mood score of every item in the output, anchor included, in output order
    /// and without repeats.
    pub fn mood_scores(&self, output: &GenerationOutput, mood: &str) -> Result<Vec<MoodScore>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for item in output.outfits().flat_map(|o| o.items()) {
            if seen.insert(item.id.clone()) {
                out.push(MoodScore {
                    item_id: item.id.clone(),
                    score: mood_score(item, mood, self.provider.as_ref())?,
                });
            }
        }
        Ok(out)
    }

    /// Prepares raw items exactly as [`build`](Self::build) would.
    pub fn prepare(&self, item: &Item) -> Result<Item> {
        prepare_item(&self.config, &self.material, self.provider.as_ref(), item)
    }

    /// A new engine with `items` appended. Only the touched index partitions
    /// are rebuilt. Nothing is applied when any item is rejected.
    pub fn with_added_items(&self, items: &[Item]) -> Result<Engine> {
        let mut catalog = self.catalog.clone();
        let mut touched: Vec<Category> = Vec::new();
        for raw in items {
            let item = self.prepare(raw)?;
            if !touched.contains(&item.category) {
                touched.push(item.category);
            }
            catalog.insert(item)?;
        }
        let index = self.index.rebuild_categories(&catalog, &touched);
        Ok(Engine {
            config: self.config.clone(),
            config_hash: self.config_hash.clone(),
            provider: Arc::clone(&self.provider),
            catalog,
            index,
            occasions: self.occasions.clone(),
            material: self.material.clone(),
        })
    }
}

/// Re-blends items that carry both modality vectors under the configured
/// weights and caches the material weight.
fn prepare_item(
    config: &EngineConfig,
    material: &MaterialContext,
    provider: &dyn EmbeddingProvider,
    item: &Item,
) -> Result<Item> {
    let mut item = item.clone();
    item.validate()?;
    if let (Some(img), Some(txt)) = (&item.image_embedding, &item.text_embedding) {
        item.embedding = blend_embedding(img, txt, config.embedding.blend)?;
    }
    item.material_weight = Some(material_weight(material, &material.material_text(&item), provider)?);
    Ok(item)
}
