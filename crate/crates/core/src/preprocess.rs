//! Text cleaning: cashtag/ticker extraction, link and special-character
//! removal, Unicode normalization, stopword filtering, and rule-table
//! lemmatization.
//!
//! The pipeline order is fixed: cashtags first (noise stripping would eat the
//! `$` sigil), then dictionary tickers, then noise stripping, tokenization,
//! and lemmatization.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Post, TickerDictionary};
use crate::error::{Error, Result};

fn cashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\$\^][a-zA-Z0-9=][a-zA-Z][a-zA-Z0-9=]+").unwrap())
}

fn link_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Also swallows any `word:`-prefixed token ("precio:14"); applied
    // verbatim, as that is the documented matching behavior.
    RE.get_or_init(|| Regex::new(r"(?:(pic.|http|www|\w+)?:(//)*)\S+").unwrap())
}

fn special_char_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"[\*\[\]=\(\)\$"\}\{\|\+&€£/°]+"#).unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#[a-zA-Z0-9]+").unwrap())
}

/// Extract `$`- and `^`-prefixed ticker symbols, uppercased, deduplicated in
/// first-occurrence order.
pub fn extract_cashtags(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in cashtag_re().find_iter(text) {
        let symbol: String = m.as_str()[1..].to_uppercase();
        if seen.insert(symbol.clone()) {
            out.push(symbol);
        }
    }
    out
}

/// Extract `#hashtag` bodies (without the `#`), deduplicated in
/// first-occurrence order.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in hashtag_re().find_iter(text) {
        let tag = m.as_str()[1..].to_string();
        if seen.insert(tag.clone()) {
            out.push(tag);
        }
    }
    out
}

/// Remove link/image matches and the special-character class, then collapse
/// surplus whitespace to single spaces.
pub fn strip_noise(text: &str) -> String {
    let no_links = link_re().replace_all(text, "");
    let no_special = special_char_re().replace_all(&no_links, "");
    no_special.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Resolve dictionary aliases appearing as whole words (or `#`-prefixed
/// forms) to canonical tickers. Multi-word aliases match as consecutive word
/// tokens. Output is deduplicated by ticker in first-occurrence order.
pub fn detect_dictionary_tickers(text: &str, dict: &TickerDictionary) -> Vec<String> {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect();

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (alias, ticker) in dict.entries() {
        let alias_words: Vec<&str> = alias.split_whitespace().collect();
        if alias_words.is_empty() {
            continue;
        }
        let hit = words
            .windows(alias_words.len())
            .any(|w| w.iter().map(String::as_str).eq(alias_words.iter().copied()));
        if hit && seen.insert(ticker.to_string()) {
            out.push(ticker.to_string());
        }
    }
    // Dictionary iteration is alphabetical; re-rank hits by where they first
    // appear in the text so output order follows the post.
    out.sort_by_key(|ticker| {
        dict.entries()
            .filter(|(_, t)| *t == ticker)
            .filter_map(|(alias, _)| first_word_position(&words, alias))
            .min()
            .unwrap_or(usize::MAX)
    });
    out
}

fn first_word_position(words: &[String], alias: &str) -> Option<usize> {
    let alias_words: Vec<&str> = alias.split_whitespace().collect();
    if alias_words.is_empty() || alias_words.len() > words.len() {
        return None;
    }
    (0..=words.len() - alias_words.len()).find(|&i| {
        words[i..i + alias_words.len()]
            .iter()
            .map(String::as_str)
            .eq(alias_words.iter().copied())
    })
}

/// Stopwords, stored in normalized form so they match normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parse one word per line; `#` lines are comments. Entries run through
    /// the same normalization as tokens, so accented source lists still
    /// match accent-folded tokens.
    pub fn from_lines(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(|l| normalize_and_tokenize(l, &StopwordList::empty()))
            .collect();
        StopwordList { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self::from_lines(&contents))
    }

    /// The bundled Spanish list.
    pub fn bundled_spanish() -> Self {
        Self::from_lines(include_str!("../resources/stopwords_es.txt"))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// NFKD-normalize, drop every codepoint that is not a letter, digit, or
/// whitespace (this removes emoticons and folds accents), lowercase,
/// whitespace-split, and drop stopwords.
pub fn normalize_and_tokenize(text: &str, stopwords: &StopwordList) -> Vec<String> {
    let filtered: String = text
        .nfkd()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    filtered
        .to_lowercase()
        .split_whitespace()
        .filter(|t| !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

/// Deterministic lemmatizer: an exceptions table consulted first, then an
/// ordered suffix-rule table. Unknown tokens pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemmatizer {
    exceptions: std::collections::BTreeMap<String, String>,
    rules: Vec<(String, String)>,
}

/// A rule only fires when the rewritten form keeps at least this many chars;
/// short function words ("mes", "dos") pass through.
const MIN_LEMMA_CHARS: usize = 3;

impl Lemmatizer {
    pub fn new(
        exceptions: impl IntoIterator<Item = (String, String)>,
        rules: Vec<(String, String)>,
    ) -> Self {
        Lemmatizer {
            exceptions: exceptions.into_iter().collect(),
            rules,
        }
    }

    pub fn bundled_spanish() -> Self {
        Self::from_strs(
            include_str!("../resources/lemma_exceptions.csv"),
            include_str!("../resources/lemma_suffix_rules.csv"),
        )
        .expect("bundled lemmatizer tables parse")
    }

    /// Parse `form,lemma` exceptions and ordered `suffix,replacement` rules.
    pub fn from_strs(exceptions_csv: &str, rules_csv: &str) -> Result<Self> {
        let parse = |contents: &str, what: &str| -> Result<Vec<(String, String)>> {
            contents
                .lines()
                .enumerate()
                .map(|(i, l)| (i, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .map(|(i, l)| match l.split_once(',') {
                    Some((a, b)) => Ok((a.trim().to_string(), b.trim().to_string())),
                    None => Err(Error::Invalid(format!(
                        "{what} line {}: expected two comma-separated fields",
                        i + 1
                    ))),
                })
                .collect()
        };
        let exceptions = parse(exceptions_csv, "lemma exceptions")?;
        let rules = parse(rules_csv, "suffix rules")?;
        for (suffix, _) in &rules {
            if suffix.is_empty() {
                return Err(Error::Invalid("suffix rule with empty suffix".into()));
            }
        }
        Ok(Self::new(exceptions, rules))
    }

    pub fn from_files(
        exceptions_path: impl AsRef<Path>,
        rules_path: impl AsRef<Path>,
    ) -> Result<Self> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))
        };
        Self::from_strs(
            &read(exceptions_path.as_ref())?,
            &read(rules_path.as_ref())?,
        )
    }

    pub fn lemma(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        for (suffix, replacement) in &self.rules {
            if let Some(stem) = token.strip_suffix(suffix.as_str()) {
                if stem.is_empty() {
                    continue;
                }
                let candidate = format!("{stem}{replacement}");
                if candidate.chars().count() >= MIN_LEMMA_CHARS {
                    return candidate;
                }
            }
        }
        token.to_string()
    }

    /// Map every token to its lemma; output length equals input length.
    pub fn lemmatize(&self, tokens: &[String]) -> Vec<String> {
        tokens.iter().map(|t| self.lemma(t)).collect()
    }
}

/// A post after the full cleaning pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanPost {
    pub post_id: String,
    /// Canonical tickers: cashtag hits first, then dictionary hits, deduped.
    pub tickers: Vec<String>,
    /// Lemmatized tokens with stopwords removed.
    pub tokens: Vec<String>,
    /// Tokens re-joined with single spaces; the unit char-grams are read from.
    pub clean_text: String,
}

/// Shared cleaning resources.
#[derive(Debug, Clone)]
pub struct TextPipeline {
    pub stopwords: StopwordList,
    pub lemmatizer: Lemmatizer,
}

impl TextPipeline {
    pub fn bundled_spanish() -> Self {
        TextPipeline {
            stopwords: StopwordList::bundled_spanish(),
            lemmatizer: Lemmatizer::bundled_spanish(),
        }
    }

    /// Run the fixed pipeline: cashtags, dictionary tickers, noise stripping,
    /// normalization/tokenization, lemmatization.
    pub fn clean(&self, post: &Post, dict: &TickerDictionary) -> CleanPost {
        let mut tickers = extract_cashtags(&post.text);
        for ticker in detect_dictionary_tickers(&post.text, dict) {
            if !tickers.contains(&ticker) {
                tickers.push(ticker);
            }
        }
        let stripped = strip_noise(&post.text);
        let tokens = normalize_and_tokenize(&stripped, &self.stopwords);
        let lemmas = self.lemmatizer.lemmatize(&tokens);
        let clean_text = lemmas.join(" ");
        CleanPost {
            post_id: post.id.clone(),
            tickers,
            tokens: lemmas,
            clean_text,
        }
    }
}
