//! N-gram count vectorizers with document-frequency pruning.
//!
//! Three extraction modes are supported: `char` (grams over the whole
//! normalized string, spaces included), `word` (grams over whitespace
//! tokens), and `char_wb` (char grams taken only inside word boundaries,
//! each word padded with one space on either side). A fitted vocabulary
//! retains the grams whose document-frequency fraction lies in
//! `[min_df, max_df]`, optionally truncated to the most frequent
//! `max_features` grams with a lexicographic tie-break.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorizerMode {
    Char,
    Word,
    CharWb,
}

impl std::fmt::Display for VectorizerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VectorizerMode::Char => "char",
            VectorizerMode::Word => "word",
            VectorizerMode::CharWb => "char_wb",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    pub mode: VectorizerMode,
    pub ngram_range: (usize, usize),
    pub min_df: f64,
    pub max_df: f64,
    #[serde(default)]
    pub max_features: Option<usize>,
}

impl VectorizerConfig {
    /// Tuned char-gram configuration.
    pub fn char_grams() -> Self {
        VectorizerConfig {
            mode: VectorizerMode::Char,
            ngram_range: (3, 4),
            min_df: 0.03,
            max_df: 0.40,
            max_features: None,
        }
    }

    /// Tuned word-gram configuration.
    pub fn word_grams() -> Self {
        VectorizerConfig {
            mode: VectorizerMode::Word,
            ngram_range: (1, 1),
            min_df: 0.01,
            max_df: 0.23,
            max_features: None,
        }
    }

    /// Tuned within-word char-gram configuration.
    pub fn char_wb_grams() -> Self {
        VectorizerConfig {
            mode: VectorizerMode::CharWb,
            ngram_range: (3, 5),
            min_df: 0.02,
            max_df: 0.26,
            max_features: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!(
                "ngram_range ({lo},{hi}) must satisfy 1 <= lo <= hi"
            )));
        }
        if !(self.min_df > 0.0 && self.min_df < self.max_df && self.max_df <= 1.0) {
            return Err(Error::Config(format!(
                "document-frequency bounds must satisfy 0 < min_df < max_df <= 1, got [{}, {}]",
                self.min_df, self.max_df
            )));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be positive".into()));
        }
        Ok(())
    }
}

/// Extract the grams of one document under the given mode and range.
/// Duplicates are preserved; callers count them.
pub fn extract_grams(mode: VectorizerMode, ngram_range: (usize, usize), text: &str) -> Vec<String> {
    let (lo, hi) = ngram_range;
    match mode {
        VectorizerMode::Word => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let mut grams = Vec::new();
            for n in lo..=hi {
                if n == 0 || n > tokens.len() {
                    continue;
                }
                for window in tokens.windows(n) {
                    grams.push(window.join(" "));
                }
            }
            grams
        }
        VectorizerMode::Char => {
            let normalized: Vec<char> = text
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .chars()
                .collect();
            let mut grams = Vec::new();
            for n in lo..=hi {
                if n == 0 || n > normalized.len() {
                    continue;
                }
                for window in normalized.windows(n) {
                    grams.push(window.iter().collect());
                }
            }
            grams
        }
        VectorizerMode::CharWb => {
            let mut grams = Vec::new();
            for word in text.split_whitespace() {
                let padded: Vec<char> = std::iter::once(' ')
                    .chain(word.chars())
                    .chain(std::iter::once(' '))
                    .collect();
                for n in lo..=hi {
                    if padded.len() > n {
                        for window in padded.windows(n) {
                            grams.push(window.iter().collect());
                        }
                    } else {
                        // n covers the whole padded word: it is the only gram
                        // at this and every larger n, so emit it once and stop.
                        grams.push(padded.iter().collect());
                        break;
                    }
                }
            }
            grams
        }
    }
}

/// Sparse per-column counts, ordered by column index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseCounts(pub BTreeMap<u32, u32>);

impl SparseCounts {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().map(|(&i, &c)| (i, c))
    }
}

/// A fitted vocabulary: gram → column index, plus the document frequencies
/// observed during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub mode: VectorizerMode,
    pub ngram_range: (usize, usize),
    /// Gram → column index; indices are dense `0..len`.
    pub terms: BTreeMap<String, u32>,
    /// Documents containing each gram, indexed by column.
    pub doc_freq: Vec<u32>,
    /// Number of documents the vocabulary was fitted on.
    pub n_docs: u32,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Gram text for a column index.
    pub fn term_of(&self, index: u32) -> Option<&str> {
        self.terms
            .iter()
            .find(|(_, &i)| i == index)
            .map(|(t, _)| t.as_str())
    }

    /// Column-ordered gram list.
    pub fn ordered_terms(&self) -> Vec<&str> {
        let mut by_index: Vec<(&str, u32)> =
            self.terms.iter().map(|(t, &i)| (t.as_str(), i)).collect();
        by_index.sort_by_key(|&(_, i)| i);
        by_index.into_iter().map(|(t, _)| t).collect()
    }
}

/// Fit a vocabulary over the corpus: count document frequencies, keep grams
/// inside the df bounds, apply the `max_features` cut (highest total count
/// first, lexicographically smaller gram on ties), and assign column indices
/// in lexicographic gram order.
pub fn fit_vectorizer(docs: &[impl AsRef<str>], config: &VectorizerConfig) -> Result<Vocabulary> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::Config("cannot fit a vectorizer on an empty corpus".into()));
    }

    let mut doc_freq: BTreeMap<String, u32> = BTreeMap::new();
    let mut total_count: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        let grams = extract_grams(config.mode, config.ngram_range, doc.as_ref());
        let mut in_doc: BTreeMap<String, u32> = BTreeMap::new();
        for gram in grams {
            *in_doc.entry(gram).or_insert(0) += 1;
        }
        for (gram, count) in in_doc {
            *doc_freq.entry(gram.clone()).or_insert(0) += 1;
            *total_count.entry(gram).or_insert(0) += u64::from(count);
        }
    }

    let n_docs = docs.len() as f64;
    let mut retained: Vec<(String, u32, u64)> = doc_freq
        .into_iter()
        .filter(|(_, df)| {
            let fraction = f64::from(*df) / n_docs;
            fraction >= config.min_df && fraction <= config.max_df
        })
        .map(|(gram, df)| {
            let total = total_count[&gram];
            (gram, df, total)
        })
        .collect();

    if let Some(limit) = config.max_features {
        retained.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        retained.truncate(limit);
    }
    retained.sort_by(|a, b| a.0.cmp(&b.0));

    if retained.is_empty() {
        return Err(Error::Config(format!(
            "no {} grams fall inside df bounds [{}, {}]; widen min_df/max_df",
            config.mode, config.min_df, config.max_df
        )));
    }

    let mut terms = BTreeMap::new();
    let mut df = Vec::with_capacity(retained.len());
    for (index, (gram, gram_df, _)) in retained.into_iter().enumerate() {
        terms.insert(gram, index as u32);
        df.push(gram_df);
    }
    Ok(Vocabulary {
        mode: config.mode,
        ngram_range: config.ngram_range,
        terms,
        doc_freq: df,
        n_docs: docs.len() as u32,
    })
}

/// Count the vocabulary grams occurring in `text`; out-of-vocabulary grams
/// are ignored.
pub fn vectorize(text: &str, vocab: &Vocabulary) -> SparseCounts {
    let mut counts = BTreeMap::new();
    for gram in extract_grams(vocab.mode, vocab.ngram_range, text) {
        if let Some(&index) = vocab.terms.get(&gram) {
            *counts.entry(index).or_insert(0) += 1;
        }
    }
    SparseCounts(counts)
}
