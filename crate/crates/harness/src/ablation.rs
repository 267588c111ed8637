//! The eight ablation configurations and how each maps onto the engine
//! configuration.

use std::fmt;
use std::str::FromStr;

use outfit_core::config::EngineConfig;
use outfit_core::embedding::BlendWeights;
use outfit_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationConfig {
    Full,
    NoBlend,
    NoOccasion,
    NoMaterial,
    NoNoise,
    NoDirection,
    NoFormality,
    Random,
}

impl AblationConfig {
    /// Report order; `random` is last.
    pub const ALL: [AblationConfig; 8] = [
        AblationConfig::Full,
        AblationConfig::NoBlend,
        AblationConfig::NoOccasion,
        AblationConfig::NoMaterial,
        AblationConfig::NoNoise,
        AblationConfig::NoDirection,
        AblationConfig::NoFormality,
        AblationConfig::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationConfig::Full => "full",
            AblationConfig::NoBlend => "no_blend",
            AblationConfig::NoOccasion => "no_occasion",
            AblationConfig::NoMaterial => "no_material",
            AblationConfig::NoNoise => "no_noise",
            AblationConfig::NoDirection => "no_direction",
            AblationConfig::NoFormality => "no_formality",
            AblationConfig::Random => "random",
        }
    }

    /// Row label in the report table.
    pub fn label(self) -> &'static str {
        match self {
            AblationConfig::Full => "Full system",
            AblationConfig::NoBlend => "- Multimodal blend (image only)",
            AblationConfig::NoOccasion => "- Occasion filtering",
            AblationConfig::NoMaterial => "- Material compatibility",
            AblationConfig::NoNoise => "- Distance noise",
            AblationConfig::NoDirection => "- Direction reranking",
            AblationConfig::NoFormality => "- Formality penalty",
            AblationConfig::Random => "Random baseline",
        }
    }

    pub fn is_random(self) -> bool {
        self == AblationConfig::Random
    }

    /// `base` with this configuration's component switched off.
    pub fn apply(self, base: &EngineConfig) -> EngineConfig {
        let mut cfg = base.clone();
        match self {
            AblationConfig::Full | AblationConfig::Random => {}
            AblationConfig::NoBlend => cfg.embedding.blend = BlendWeights::image_only(),
            AblationConfig::NoOccasion => cfg.features.occasion_filter = false,
            AblationConfig::NoMaterial => cfg.features.layer_compatibility = false,
            AblationConfig::NoNoise => {
                cfg.retrieval.noise_low = 1.0;
                cfg.retrieval.noise_high = 1.0;
            }
            AblationConfig::NoDirection => {
                for d in &mut cfg.directions {
                    d.enabled = false;
                }
            }
            AblationConfig::NoFormality => cfg.scoring.formality_coefficient = 0.0,
        }
        cfg
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        AblationConfig::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation config {s:?}")))
    }
}
