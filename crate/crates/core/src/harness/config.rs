//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{CuriosityConfig, GaConfig};
use crate::env::EnvName;
use crate::llm::ProviderConfig;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Random,
    Ga,
    Curiosity,
    Klpeg,
    KlpegNoKg,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Random, Method::Ga, Method::Curiosity, Method::Klpeg, Method::KlpegNoKg];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Ga => "ga",
            Method::Curiosity => "curiosity",
            Method::Klpeg => "klpeg",
            Method::KlpegNoKg => "klpeg_no_kg",
        }
    }

    pub fn uses_pipeline(self) -> bool {
        matches!(self, Method::Klpeg | Method::KlpegNoKg)
    }
}

impl std::str::FromStr for Method {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| HarnessError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConfig {
    pub max_steps: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        Self { max_steps: 500 }
    }
}

/// How the seed graph is obtained when no graph file is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationConfig {
    pub seeds: Vec<u64>,
    pub curiosity: CuriosityConfig,
    /// Ask the gateway to extract triples from UI text.
    pub use_llm: bool,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            curiosity: CuriosityConfig::default(),
            use_llm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum LlmConfig {
    /// Offline scripted provider bundled with each environment.
    Mock,
    Http(ProviderConfig),
}

impl LlmConfig {
    /// Short name for report rows: `mock` or the provider's model id.
    pub fn label(&self) -> &str {
        match self {
            LlmConfig::Mock => "mock",
            LlmConfig::Http(p) => &p.model,
        }
    }
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig::Mock
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvName,
    pub method: Method,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// 1-based update numbers to test; empty means all of them.
    #[serde(default)]
    pub updates: Vec<u8>,
    /// Atomic step cap for each generated test case.
    #[serde(default = "default_test_steps")]
    pub max_steps_per_test: usize,
    /// Seed graph file; built by exploration when absent.
    #[serde(default)]
    pub seed_graph: Option<PathBuf>,
    #[serde(default)]
    pub random: RandomConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub curiosity: CuriosityConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub exploration: ExplorationConfig,
    #[serde(default)]
    pub llm: LlmConfig,
}

fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}

fn default_test_steps() -> usize {
    200
}

impl ExperimentConfig {
    pub fn new(env: EnvName, method: Method) -> Self {
        Self {
            env,
            method,
            seeds: default_seeds(),
            updates: Vec::new(),
            max_steps_per_test: default_test_steps(),
            seed_graph: None,
            random: RandomConfig::default(),
            ga: GaConfig::default(),
            curiosity: CuriosityConfig::default(),
            pipeline: PipelineConfig::default(),
            exploration: ExplorationConfig::default(),
            llm: LlmConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `seed_graph` resolves against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(g), Some(dir)) = (&cfg.seed_graph, path.parent()) {
            if g.is_relative() {
                cfg.seed_graph = Some(dir.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if self.updates.contains(&0) {
            return bad("update numbers start at 1");
        }
        if self.max_steps_per_test == 0 || self.random.max_steps == 0 {
            return bad("step caps must be positive");
        }
        self.ga.validate()?;
        self.curiosity.validate()?;
        self.exploration.curiosity.validate()?;
        self.pipeline.policy()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("env = \"craftworld\"\nmethod = \"klpeg_no_kg\"\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(EnvName::Craftworld, Method::KlpegNoKg));
        assert_eq!(cfg.seeds.len(), 20);
    }

    #[test]
    fn nested_sections_and_rejections() {
        let text = "env = \"overcooked_lite\"\nmethod = \"ga\"\nseeds = [4]\n[ga]\ngenerations = 3\n[llm]\nprovider = \"mock\"\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!((cfg.ga.generations, cfg.seeds.clone()), (3, vec![4]));
        assert!(ExperimentConfig::from_toml("env = \"craftworld\"\nmethod = \"klpeg\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("env = \"craftworld\"\nmethod = \"klpeg\"\nseeds = []\n").is_err());
        assert!(ExperimentConfig::from_toml("env = \"craftworld\"\nmethod = \"klpeg\"\n[pipeline]\nmax_hops = 0\n").is_err());
        assert_eq!("klpeg-no-kg".parse::<Method>().unwrap(), Method::KlpegNoKg);
    }
}
