//! Shared run state: parsed config, loaded language resources, training
//! artifacts, and the featurization helpers every command builds on.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use credscore_core::classify::{
    hybrid_classify, ClassificationSource, HybridOutcome, TrainedModel,
};
use credscore_core::corpus::{
    load_posts, load_ticker_dictionary, Category, PostRecord, TickerDictionary,
};
use credscore_core::explain::ExplanationTemplate;
use credscore_core::features::{
    build_feature_vector, AffectLexicon, FeatureExtractor, FeatureLayout, VocabularySet,
};
use credscore_core::lexicon::CategoryLexicons;
use credscore_core::preprocess::{
    extract_cashtags, extract_hashtags, CleanPost, Lemmatizer, StopwordList, TextPipeline,
};
use credscore_core::verify::{ForecastOutcome, HttpPriceProvider, LocalCsvStore, PriceProvider};

use crate::config::{LoadedConfig, PipelineConfig, PriceProviderConfig};
use crate::manifest::RunManifest;

pub const PRICE_BASE_URL_ENV: &str = "CREDSCORE_PRICE_BASE_URL";

pub struct Workspace {
    pub loaded: LoadedConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub pipeline: TextPipeline,
    pub extractor: FeatureExtractor,
    pub template: ExplanationTemplate,
    pub dictionary: TickerDictionary,
}

impl Workspace {
    pub fn open(
        config_path: &Path,
        seed_override: Option<u64>,
        out_override: Option<PathBuf>,
    ) -> Result<Self> {
        let loaded = LoadedConfig::load(config_path)?;
        let seed = seed_override.unwrap_or(loaded.config.seed);
        let out_dir = out_override
            .map(|p| {
                if p.is_absolute() {
                    p
                } else {
                    std::env::current_dir().unwrap_or_default().join(p)
                }
            })
            .unwrap_or_else(|| loaded.resolve(&loaded.config.out_dir));
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;

        let stopwords = match &loaded.config.paths.stopwords {
            Some(path) => StopwordList::from_file(loaded.resolve(path))?,
            None => StopwordList::bundled_spanish(),
        };
        let lemmatizer = match (
            &loaded.config.paths.lemma_exceptions,
            &loaded.config.paths.lemma_rules,
        ) {
            (Some(exceptions), Some(rules)) => {
                Lemmatizer::from_files(loaded.resolve(exceptions), loaded.resolve(rules))?
            }
            (None, None) => Lemmatizer::bundled_spanish(),
            _ => bail!("lemma_exceptions and lemma_rules must be set together"),
        };
        let affect = match &loaded.config.paths.affect_lexicon {
            Some(path) => AffectLexicon::from_file(loaded.resolve(path))?,
            None => AffectLexicon::bundled_spanish(),
        };
        let template = match &loaded.config.paths.template {
            Some(path) => ExplanationTemplate::from_file(loaded.resolve(path))?,
            None => ExplanationTemplate::default(),
        };
        let dictionary = if loaded.config.paths.ticker_dictionaries.is_empty() {
            TickerDictionary::new()
        } else {
            let paths: Vec<PathBuf> = loaded
                .config
                .paths
                .ticker_dictionaries
                .iter()
                .map(|p| loaded.resolve(p))
                .collect();
            load_ticker_dictionary(&paths)?
        };

        let extractor = FeatureExtractor {
            affect,
            count_currency_words: loaded.config.count_currency_words,
            ..FeatureExtractor::default()
        };

        Ok(Workspace {
            pipeline: TextPipeline {
                stopwords,
                lemmatizer,
            },
            extractor,
            template,
            dictionary,
            seed,
            out_dir,
            loaded,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.loaded.config
    }

    pub fn posts_path(&self) -> PathBuf {
        self.loaded.resolve(&self.config().paths.posts)
    }

    pub fn artifacts_dir(&self) -> PathBuf {
        self.loaded.resolve(&self.config().paths.artifacts_dir)
    }

    /// Load posts and fill in extracted cashtags/hashtags.
    pub fn load_posts(&self) -> Result<Vec<PostRecord>> {
        let mut records = load_posts(self.posts_path())?;
        for record in &mut records {
            if record.post.cashtags.is_empty() {
                record.post.cashtags = extract_cashtags(&record.post.text);
            }
            if record.post.hashtags.is_empty() {
                record.post.hashtags = extract_hashtags(&record.post.text);
            }
        }
        Ok(records)
    }

    pub fn provider(&self) -> Result<Box<dyn PriceProvider>> {
        if let Ok(base_url) = std::env::var(PRICE_BASE_URL_ENV) {
            return Ok(Box::new(HttpPriceProvider::new(base_url)));
        }
        match &self.config().price_provider {
            PriceProviderConfig::LocalCsv => {
                let dir = self
                    .config()
                    .paths
                    .prices_dir
                    .as_ref()
                    .ok_or_else(|| anyhow!("price_provider local_csv requires paths.prices_dir"))?;
                Ok(Box::new(LocalCsvStore::new(self.loaded.resolve(dir))))
            }
            PriceProviderConfig::Http { base_url } => {
                Ok(Box::new(HttpPriceProvider::new(base_url.clone())))
            }
        }
    }

    pub fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, &self.loaded.raw, self.seed)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.out_dir.join(name);
        let json = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.out_dir.join(name);
        let mut body = String::new();
        for row in rows {
            body.push_str(&serde_json::to_string(row)?);
            body.push('\n');
        }
        std::fs::write(&path, body)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, body: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, body)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Everything the train command persists; the downstream commands reload it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainArtifacts {
    pub model: TrainedModel,
    pub lexicons: CategoryLexicons,
    pub vocabularies: VocabularySet,
    /// Lemma → total occurrence count over the training corpus; used to map
    /// char-grams back to words in explanations.
    pub term_freqs: BTreeMap<String, u64>,
}

impl TrainArtifacts {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        let write = |name: &str, json: String| -> Result<()> {
            std::fs::write(dir.join(name), json + "\n")
                .with_context(|| format!("writing {}", dir.join(name).display()))
        };
        write("model.json", self.model.to_json()?)?;
        write(
            "lexicons.json",
            serde_json::to_string_pretty(&self.lexicons)?,
        )?;
        write(
            "vocabularies.json",
            serde_json::to_string_pretty(&self.vocabularies)?,
        )?;
        write(
            "term_freqs.json",
            serde_json::to_string_pretty(&self.term_freqs)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            std::fs::read_to_string(dir.join(name)).with_context(|| {
                format!(
                    "reading {}; run `credscore train` first",
                    dir.join(name).display()
                )
            })
        };
        Ok(TrainArtifacts {
            model: TrainedModel::from_json(&read("model.json")?)?,
            lexicons: serde_json::from_str(&read("lexicons.json")?)?,
            vocabularies: serde_json::from_str(&read("vocabularies.json")?)?,
            term_freqs: serde_json::from_str(&read("term_freqs.json")?)?,
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::from_vocabularies(&self.vocabularies)
    }
}

/// A post with its cleaned form and dense feature row.
pub struct FeaturizedPost {
    pub record: PostRecord,
    pub clean: CleanPost,
    pub dense: Vec<f64>,
}

pub fn featurize(
    ws: &Workspace,
    records: &[PostRecord],
    vocabs: &VocabularySet,
    layout: &FeatureLayout,
) -> Vec<FeaturizedPost> {
    records
        .iter()
        .map(|record| {
            let clean = ws.pipeline.clean(&record.post, &ws.dictionary);
            let vector = build_feature_vector(&ws.extractor, &record.post.text, &clean, vocabs);
            FeaturizedPost {
                record: record.clone(),
                clean,
                dense: layout.dense(&vector),
            }
        })
        .collect()
}

/// One line of `classifications.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub post_id: String,
    pub advisor_id: String,
    pub published_at: DateTime<FixedOffset>,
    pub publish_date: NaiveDate,
    pub tickers: Vec<String>,
    pub category: Category,
    pub source: ClassificationSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_scores: Option<Vec<f64>>,
}

/// One line of `outcomes.jsonl`: a forecast outcome tagged with its advisor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub advisor_id: String,
    #[serde(flatten)]
    pub outcome: ForecastOutcome,
}

/// Hybrid-classify every featurized post.
pub fn classify_all(
    featurized: &[FeaturizedPost],
    artifacts: &TrainArtifacts,
) -> Result<Vec<(ClassificationRecord, HybridOutcome)>> {
    featurized
        .iter()
        .map(|fp| {
            let outcome = hybrid_classify(
                &fp.clean.tokens,
                &fp.dense,
                &artifacts.lexicons,
                &artifacts.model,
            )?;
            let record = ClassificationRecord {
                post_id: fp.record.post.id.clone(),
                advisor_id: fp.record.post.advisor_id.clone(),
                published_at: fp.record.post.published_at,
                publish_date: fp.record.post.publish_date(),
                tickers: fp.clean.tickers.clone(),
                category: outcome.category,
                source: outcome.source,
                matched_terms: outcome.matched_terms.clone(),
                class_scores: outcome.class_scores.clone(),
            };
            Ok((record, outcome))
        })
        .collect::<credscore_core::Result<Vec<_>>>()
        .map_err(Into::into)
}

/// Classification counts reported by classify/assess.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub posts: usize,
    pub lexicon_classified: usize,
    pub ml_classified: usize,
    pub lexicon_coverage: f64,
    pub drop: usize,
    pub rise: usize,
    pub other: usize,
}

pub fn summarize(classifications: &[(ClassificationRecord, HybridOutcome)]) -> ClassificationSummary {
    let lexicon = classifications
        .iter()
        .filter(|(r, _)| r.source == ClassificationSource::Lexicon)
        .count();
    let count = |category: Category| {
        classifications
            .iter()
            .filter(|(r, _)| r.category == category)
            .count()
    };
    ClassificationSummary {
        posts: classifications.len(),
        lexicon_classified: lexicon,
        ml_classified: classifications.len() - lexicon,
        lexicon_coverage: if classifications.is_empty() {
            0.0
        } else {
            lexicon as f64 / classifications.len() as f64
        },
        drop: count(Category::ShortTermDrop),
        rise: count(Category::ShortTermRise),
        other: count(Category::Other),
    }
}
