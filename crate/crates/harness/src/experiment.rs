//! A full ablation experiment: one catalog, one anchor plan, every config.

use outfit_core::catalog::{Catalog, Category};
use outfit_core::config::EngineConfig;
use outfit_core::Result;

use crate::ablation::AblationConfig;
use crate::report::ReportRow;
use crate::run::{plan_anchors, run_config, AnchorPlan, ConfigRun};
use crate::synth::{synth_catalog, Composition, SynthSpec};

/// Fails the run when more than this share of anchors cannot be filled.
pub const MAX_UNFILLABLE_RATE: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub anchors: usize,
    pub composition: Composition,
    pub anchor_categories: Vec<Category>,
    pub configs: Vec<AblationConfig>,
    pub parallel: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            anchors: 50,
            composition: Composition::reference(),
            anchor_categories: vec![Category::Top],
            configs: AblationConfig::ALL.to_vec(),
            parallel: false,
        }
    }
}

pub struct Experiment {
    pub base: EngineConfig,
    pub catalog: Catalog,
    pub plans: Vec<AnchorPlan>,
    pub runs: Vec<ConfigRun>,
}

impl Experiment {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.runs.iter().map(ReportRow::from).collect()
    }

    pub fn run(&self, config: AblationConfig) -> Option<&ConfigRun> {
        self.runs.iter().find(|r| r.config == config)
    }

    /// Configurations whose unfillable-anchor share exceeds the limit.
    pub fn over_unfillable_limit(&self) -> Vec<AblationConfig> {
        self.runs
            .iter()
            .filter(|r| r.metrics.unfillable_rate() > MAX_UNFILLABLE_RATE)
            .map(|r| r.config)
            .collect()
    }
}

pub fn synth_for(base: &EngineConfig, opts: &ExperimentOptions) -> Result<Catalog> {
    synth_catalog(&SynthSpec {
        composition: opts.composition.clone(),
        ..SynthSpec::reference(opts.seed, base.embedding.synthetic_seed)
    })
}

pub fn run_experiment(base: &EngineConfig, opts: &ExperimentOptions) -> Result<Experiment> {
    let catalog = synth_for(base, opts)?;
    run_experiment_on(base, catalog, opts)
}

pub fn run_experiment_on(base: &EngineConfig, catalog: Catalog, opts: &ExperimentOptions) -> Result<Experiment> {
    let occasions: Vec<String> = base.occasions.keys().cloned().collect();
    let plans = plan_anchors(&catalog, opts.anchors, opts.seed, &opts.anchor_categories, &occasions);
    let runs = opts
        .configs
        .iter()
        .map(|&c| run_config(c, base, &catalog, &plans, opts.parallel))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        base: base.clone(),
        catalog,
        plans,
        runs,
    })
}
