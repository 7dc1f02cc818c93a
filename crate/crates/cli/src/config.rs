//! Pipeline configuration file.
//!
//! Relative paths resolve against the directory holding the config file.
//! Every run consumes one config plus optional `--seed` / `--out` overrides;
//! the effective seed is recorded in the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use credscore_core::classify::{Algorithm, HyperValue};
use credscore_core::explain::ExplainerConfig;
use credscore_core::features::VectorizerConfig;
use credscore_core::insight::CorrelationMethod;
use credscore_core::verify::{CalendarSpec, VerificationConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub posts: PathBuf,
    #[serde(default)]
    pub prices_dir: Option<PathBuf>,
    #[serde(default)]
    pub ticker_dictionaries: Vec<PathBuf>,
    #[serde(default)]
    pub social_metrics: Option<PathBuf>,
    /// Overrides for the bundled language resources.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub lemma_exceptions: Option<PathBuf>,
    #[serde(default)]
    pub lemma_rules: Option<PathBuf>,
    #[serde(default)]
    pub affect_lexicon: Option<PathBuf>,
    #[serde(default)]
    pub template: Option<PathBuf>,
    /// Where train writes (and the other commands read) model artifacts.
    pub artifacts_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorizersConfig {
    pub char: VectorizerConfig,
    pub word: VectorizerConfig,
    pub char_wb: VectorizerConfig,
}

impl Default for VectorizersConfig {
    fn default() -> Self {
        VectorizersConfig {
            char: VectorizerConfig::char_grams(),
            word: VectorizerConfig::word_grams(),
            char_wb: VectorizerConfig::char_wb_grams(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, HyperValue>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationSettings {
    #[serde(default = "default_threshold")]
    pub threshold_fraction: f64,
    #[serde(default = "default_window_weeks")]
    pub window_weeks: u32,
    #[serde(default)]
    pub calendar: CalendarSpec,
}

fn default_threshold() -> f64 {
    0.03
}

fn default_window_weeks() -> u32 {
    3
}

impl Default for VerificationSettings {
    fn default() -> Self {
        VerificationSettings {
            threshold_fraction: default_threshold(),
            window_weeks: default_window_weeks(),
            calendar: CalendarSpec::Weekday,
        }
    }
}

impl VerificationSettings {
    pub fn build(&self) -> Result<VerificationConfig> {
        let config = VerificationConfig {
            threshold_fraction: self.threshold_fraction,
            window_weeks: self.window_weeks,
            calendar: self.calendar.build(),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Price source. The HTTP base URL can be overridden with the
/// `CREDSCORE_PRICE_BASE_URL` environment variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriceProviderConfig {
    LocalCsv,
    Http { base_url: String },
}

impl Default for PriceProviderConfig {
    fn default() -> Self {
        PriceProviderConfig::LocalCsv
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub vectorizers: VectorizersConfig,
    #[serde(default = "default_lexicon_fraction")]
    pub lexicon_fraction: f64,
    pub classifier: ClassifierConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub verification: VerificationSettings,
    #[serde(default)]
    pub price_provider: PriceProviderConfig,
    #[serde(default)]
    pub correlation_method: CorrelationMethod,
    #[serde(default)]
    pub explainer: ExplainerConfig,
    /// Count "4.54 euros"-style currency words toward the numeric counters.
    #[serde(default)]
    pub count_currency_words: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn default_lexicon_fraction() -> f64 {
    0.10
}

fn default_folds() -> usize {
    10
}

/// A parsed config plus the directory its relative paths resolve against and
/// the raw bytes (digested into the manifest).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
    pub raw: Vec<u8>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: PipelineConfig = serde_json::from_slice(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if !(config.lexicon_fraction > 0.0 && config.lexicon_fraction <= 1.0) {
            bail!("lexicon_fraction must be in (0, 1]");
        }
        if config.folds < 2 {
            bail!("folds must be at least 2");
        }
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(LoadedConfig {
            config,
            base_dir,
            raw,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}
