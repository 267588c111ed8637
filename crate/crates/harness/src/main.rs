use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use outfit_core::cache::{CacheEntry, CacheKey, InvalidationMap, OutfitCache};
use outfit_core::catalog::{load_catalog, Category};
use outfit_core::config::EngineConfig;
use outfit_core::embedding::SyntheticProvider;
use outfit_core::Engine;
use outfit_harness::ablation::AblationConfig;
use outfit_harness::experiment::{run_experiment, synth_for, ExperimentOptions};
use outfit_harness::report::{from_csv, render_latency, render_table, to_csv};
use outfit_harness::synth::Composition;

#[derive(Parser)]
#[command(name = "outfit-bench", about = "Synthetic catalogs, ablations and reports")]
struct Cli {
    /// Engine configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    anchors: usize,
    /// Per-category counts, e.g. `top=230,bottom=170,shoes=140,dress=50,accessory=30`.
    #[arg(long)]
    composition: Option<String>,
    /// Categories anchors are drawn from, comma separated.
    #[arg(long, default_value = "top")]
    anchor_categories: String,
    /// Run anchors concurrently (latency numbers become less stable).
    #[arg(long)]
    parallel: bool,
}

impl ExperimentArgs {
    fn options(&self, configs: Vec<AblationConfig>) -> Result<ExperimentOptions, String> {
        let composition = match &self.composition {
            Some(s) => Composition::parse(s).map_err(|e| e.to_string())?,
            None => Composition::reference(),
        };
        let anchor_categories = self
            .anchor_categories
            .split(',')
            .map(|s| s.trim().parse::<Category>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentOptions {
            seed: self.seed,
            anchors: self.anchors,
            composition,
            anchor_categories,
            configs,
            parallel: self.parallel,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic catalog as JSON lines.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        composition: Option<String>,
        #[arg(long, default_value = "catalog.jsonl")]
        out: PathBuf,
    },
    /// Run the ablation table.
    Ablate {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Subset of configurations, comma separated.
        #[arg(long)]
        configs: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Inter-direction diversity, full against no_direction.
    Diversity {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Pre-generate outfits for every cacheable anchor and occasion.
    Warm {
        /// Catalog file; a synthetic catalog when omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "cache.json")]
        out: PathBuf,
    },
    /// Re-render the ablation table from its CSV.
    Report {
        #[arg(long, default_value = "results/ablation.csv")]
        csv: PathBuf,
    },
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let base = match &cli.config {
        Some(p) => EngineConfig::from_file(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => EngineConfig::default(),
    };
    match cli.command {
        Command::Synth { seed, composition, out } => {
            let opts = ExperimentArgs {
                seed,
                anchors: 0,
                composition,
                anchor_categories: "top".into(),
                parallel: false,
            }
            .options(vec![])?;
            let catalog = synth_for(&base, &opts).map_err(|e| e.to_string())?;
            write(&out, &catalog.to_jsonl())?;
            println!("wrote {} items to {}", catalog.len(), out.display());
        }
        Command::Ablate { exp, configs, out } => {
            let configs = match configs {
                Some(s) => s
                    .split(',')
                    .map(|c| c.trim().parse::<AblationConfig>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => AblationConfig::ALL.to_vec(),
            };
            let experiment = run_experiment(&base, &exp.options(configs)?).map_err(|e| e.to_string())?;
            let rows = experiment.rows();
            let table = render_table(&rows);
            let latency: Vec<_> = experiment.runs.iter().map(|r| (r.config, r.latency.clone())).collect();
            write(&out.join("ablation.csv"), &to_csv(&rows).map_err(|e| e.to_string())?)?;
            write(&out.join("ablation.txt"), &table)?;
            write(&out.join("latency.txt"), &render_latency(&latency))?;
            let anchors = serde_json::to_string_pretty(&experiment.plans).map_err(|e| e.to_string())?;
            write(&out.join("anchors.json"), &anchors)?;
            print!("{table}\n{}", render_latency(&latency));
            let over = experiment.over_unfillable_limit();
            if !over.is_empty() {
                eprintln!("unfillable-anchor rate above 20% for: {over:?}");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Diversity { exp } => {
            let opts = exp.options(vec![AblationConfig::Full, AblationConfig::NoDirection])?;
            let experiment = run_experiment(&base, &opts).map_err(|e| e.to_string())?;
            println!("{:<14} {:>16} {:>14}", "config", "distinct_colors", "slot_diversity");
            for r in &experiment.runs {
                println!(
                    "{:<14} {:>16.2} {:>14.2}",
                    r.config.as_str(),
                    r.metrics.mean_distinct_colors,
                    r.metrics.mean_slot_diversity
                );
            }
            if !experiment.over_unfillable_limit().is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Warm { catalog, seed, out } => {
            let catalog = match catalog {
                Some(p) => {
                    let provider = SyntheticProvider::new(base.embedding.synthetic_seed);
                    load_catalog(&p, &provider).map_err(|e| format!("{}: {e}", p.display()))?
                }
                None => synth_for(&base, &ExperimentOptions { seed, ..Default::default() }).map_err(|e| e.to_string())?,
            };
            let engine = Engine::with_synthetic(base, catalog).map_err(|e| e.to_string())?;
            let map = InvalidationMap::default();
            let mut cache = OutfitCache::new();
            let occasions: Vec<String> = engine.occasion_names().map(String::from).collect();
            let mut stamp = 0u64;
            for item in engine.catalog().items().iter().filter(|i| map.covers_anchor(i.category)) {
                for occasion in &occasions {
                    let req = engine.request(&item.id, occasion, seed);
                    let output = engine.generate(&req, None, None).map_err(|e| e.to_string())?;
                    stamp += 1;
                    cache.insert(
                        CacheKey::new(&item.id, occasion),
                        CacheEntry {
                            anchor_category: item.category,
                            output,
                            generated_at: stamp,
                        },
                    );
                }
            }
            write(&out, &serde_json::to_string(&cache).map_err(|e| e.to_string())?)?;
            println!("cached {} entries in {}", cache.len(), out.display());
        }
        Command::Report { csv } => {
            let text = fs::read_to_string(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            let rows = from_csv(&text).map_err(|e| e.to_string())?;
            print!("{}", render_table(&rows));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
