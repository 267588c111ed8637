//! Running one ablation configuration over a shared anchor set.

use std::collections::BTreeSet;
use std::time::Instant;

use outfit_core::catalog::{Catalog, Category};
use outfit_core::config::EngineConfig;
use outfit_core::embedding::mix64;
use outfit_core::generator::{GenerationOutput, OutfitCandidate};
use outfit_core::{Engine, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ablation::AblationConfig;

/// One anchor of the experiment with its occasion and request seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorPlan {
    pub anchor_id: String,
    pub occasion: String,
    pub seed: u64,
}

/// Draws `n` anchors without replacement from `categories` and assigns
/// occasions round-robin. Every configuration of a run reuses this list.
pub fn plan_anchors(
    catalog: &Catalog,
    n: usize,
    seed: u64,
    categories: &[Category],
    occasions: &[String],
) -> Vec<AnchorPlan> {
    let mut pool: Vec<&str> = catalog
        .items()
        .iter()
        .filter(|i| categories.contains(&i.category))
        .map(|i| i.id.as_str())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0xA2C4));
    pool.shuffle(&mut rng);
    pool.truncate(n);
    pool.into_iter()
        .enumerate()
        .map(|(i, id)| AnchorPlan {
            anchor_id: id.to_string(),
            occasion: occasions[i % occasions.len()].clone(),
            seed: mix64(seed ^ (i as u64 + 1)),
        })
        .collect()
}

/// What the diversity metrics need from an outfit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutfitView {
    pub colors: Vec<String>,
    pub categories: BTreeSet<Category>,
}

impl From<&OutfitCandidate> for OutfitView {
    fn from(o: &OutfitCandidate) -> Self {
        OutfitView {
            colors: o.items().map(|i| i.color.clone()).collect(),
            categories: o.items().map(|i| i.category).collect(),
        }
    }
}

/// Per anchor: distinct colors over the union of its outfits, and the mean
/// number of distinct categories per outfit. Both averaged over anchors that
/// have at least one outfit.
pub fn diversity_metrics(triples: &[Vec<OutfitView>]) -> (f64, f64) {
    let mut colors = 0.0;
    let mut slots = 0.0;
    let mut n = 0usize;
    for triple in triples.iter().filter(|t| !t.is_empty()) {
        let distinct: BTreeSet<&str> = triple.iter().flat_map(|o| o.colors.iter().map(String::as_str)).collect();
        colors += distinct.len() as f64;
        slots += triple.iter().map(|o| o.categories.len() as f64).sum::<f64>() / triple.len() as f64;
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    (colors / n as f64, slots / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub anchors: usize,
    pub unfillable_anchors: usize,
    pub outfits: usize,
    pub mean_score: f64,
    /// Share of outfits with total <= -1.
    pub violation_rate: f64,
    pub mean_distinct_colors: f64,
    pub mean_slot_diversity: f64,
}

impl RunMetrics {
    pub fn unfillable_rate(&self) -> f64 {
        if self.anchors == 0 {
            0.0
        } else {
            self.unfillable_anchors as f64 / self.anchors as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean_ms: f64,
    pub p95_ms: f64,
}

impl Latency {
    pub fn from_samples(samples_ms: &[f64]) -> Self {
        if samples_ms.is_empty() {
            return Latency { mean_ms: 0.0, p95_ms: 0.0 };
        }
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        // Nearest-rank percentile.
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Latency {
            mean_ms: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p95_ms: sorted[rank - 1],
        }
    }
}

/// Aggregates generation outputs. Anchors with any direction gap count as
/// unfillable and are left out of the means.
pub fn aggregate(outputs: &[GenerationOutput]) -> RunMetrics {
    let filled: Vec<&GenerationOutput> = outputs.iter().filter(|o| !o.has_gap()).collect();
    let outfits: Vec<&OutfitCandidate> = filled.iter().flat_map(|o| o.outfits()).collect();
    let n = outfits.len();
    let mean = |f: &dyn Fn(&OutfitCandidate) -> f64| {
        if n == 0 {
            0.0
        } else {
            outfits.iter().map(|o| f(o)).sum::<f64>() / n as f64
        }
    };
    let triples: Vec<Vec<OutfitView>> = filled
        .iter()
        .map(|o| o.outfits().map(OutfitView::from).collect())
        .collect();
    let (mean_distinct_colors, mean_slot_diversity) = diversity_metrics(&triples);
    RunMetrics {
        anchors: outputs.len(),
        unfillable_anchors: outputs.len() - filled.len(),
        outfits: n,
        mean_score: mean(&|o| o.breakdown.total),
        violation_rate: mean(&|o| f64::from(o.breakdown.total <= -1.0)),
        mean_distinct_colors,
        mean_slot_diversity,
    }
}

#[derive(Debug, Clone)]
pub struct ConfigRun {
    pub config: AblationConfig,
    pub config_hash: String,
    pub outputs: Vec<GenerationOutput>,
    pub metrics: RunMetrics,
    pub latency: Latency,
    /// Index searches issued during the run.
    pub index_searches: u64,
}

/// Builds the engine for `config` and generates for every planned anchor.
/// With `parallel`, anchors run on the rayon pool; outputs keep plan order.
pub fn run_config(
    config: AblationConfig,
    base: &EngineConfig,
    catalog: &Catalog,
    plans: &[AnchorPlan],
    parallel: bool,
) -> Result<ConfigRun> {
    let engine = Engine::with_synthetic(config.apply(base), catalog.clone())?;
    let before = engine.index().search_count();
    let one = |plan: &AnchorPlan| -> Result<(GenerationOutput, f64)> {
        let req = engine.request(&plan.anchor_id, &plan.occasion, plan.seed);
        let start = Instant::now();
        let out = if config.is_random() {
            engine.generate_random(&req)?
        } else {
            engine.generate(&req, None, None)?
        };
        Ok((out, start.elapsed().as_secs_f64() * 1e3))
    };
    let results: Vec<(GenerationOutput, f64)> = if parallel {
        plans.par_iter().map(one).collect::<Result<_>>()?
    } else {
        plans.iter().map(one).collect::<Result<_>>()?
    };
    let (outputs, latencies): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(ConfigRun {
        config,
        config_hash: engine.config_hash().to_string(),
        metrics: aggregate(&outputs),
        latency: Latency::from_samples(&latencies),
        index_searches: engine.index().search_count() - before,
        outputs,
    })
}
