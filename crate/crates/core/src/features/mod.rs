//! Feature engineering: stylistic scalar features, affect annotation, a
//! closed-class POS tagger, and assembly of the full feature vector
//! (scalar block + three n-gram count blocks).
//!
//! The slot order of the assembled vector is frozen and documented in
//! [`SCALAR_SLOT_NAMES`]; the explanation renderer maps feature indices back
//! to display names through [`FeatureLayout`], so reordering slots is a
//! breaking change.

pub mod vectorizer;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{self, CleanPost, StopwordList};
pub use vectorizer::{
    extract_grams, fit_vectorizer, vectorize, SparseCounts, VectorizerConfig, VectorizerMode,
    Vocabulary,
};

/// Spanish vowels, accented forms included, used by the syllable heuristic.
const VOWELS: &str = "aeiouáéíóúüAEIOUÁÉÍÓÚÜ";

/// Count maximal vowel groups in a word.
pub fn syllable_count(word: &str) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for c in word.chars() {
        if VOWELS.contains(c) {
            if !in_group {
                groups += 1;
                in_group = true;
            }
        } else {
            in_group = false;
        }
    }
    groups
}

/// Sentences are the `[.!?]`-separated segments containing at least one
/// alphanumeric character; a text with words but no terminator counts as one
/// sentence.
pub fn sentence_count(text: &str) -> usize {
    let segments = text
        .split(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .count();
    segments.max(1)
}

/// Coefficients of the reading-ease formula, configurable because regional
/// variants of the score reweight the same two ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleschCoefficients {
    pub base: f64,
    pub words_per_sentence: f64,
    pub syllables_per_word: f64,
}

impl Default for FleschCoefficients {
    fn default() -> Self {
        FleschCoefficients {
            base: 206.835,
            words_per_sentence: 1.015,
            syllables_per_word: 84.6,
        }
    }
}

/// Flesch reading ease:
/// `base − w·(words/sentences) − s·(syllables/words)`.
pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    flesch_reading_ease_with(text, &FleschCoefficients::default())
}

pub fn flesch_reading_ease_with(text: &str, coeffs: &FleschCoefficients) -> Result<f64> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::EmptyText);
    }
    let sentences = sentence_count(text) as f64;
    let syllables: usize = words.iter().map(|w| syllable_count(w)).sum();
    let n_words = words.len() as f64;
    Ok(coeffs.base
        - coeffs.words_per_sentence * (n_words / sentences)
        - coeffs.syllables_per_word * (syllables as f64 / n_words))
}

/// McAlpine EFLAW readability: `(words + miniwords) / sentences`, where a
/// miniword has at most three characters.
pub fn mcalpine_eflaw(text: &str) -> Result<f64> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::EmptyText);
    }
    let miniwords = words.iter().filter(|w| w.chars().count() <= 3).count();
    let sentences = sentence_count(text) as f64;
    Ok((words.len() + miniwords) as f64 / sentences)
}

/// Milliseconds per character of the reading-time estimate.
pub const READING_TIME_MS_PER_CHAR: f64 = 14.69;

/// Estimated reading time: trimmed character count × 14.69 ms.
pub fn reading_time_ms(text: &str) -> f64 {
    text.trim().chars().count() as f64 * READING_TIME_MS_PER_CHAR
}

fn quantity_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?[0-9.,]+[$€%]").unwrap())
}

fn currency_word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)-?[0-9.,]+\s*(euros?|dólares?|dolares?|dollars?)\b").unwrap()
    })
}

fn hashtag_count_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#[a-zA-Z0-9]+").unwrap())
}

/// Counters of signed monetary and percentage quantities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedQuantities {
    pub pos_num: u32,
    pub neg_num: u32,
    pub pos_per: u32,
    pub neg_per: u32,
}

/// Count quantities written with a trailing `$`, `€`, or `%`, partitioned by
/// a leading minus sign. Runs on raw text, before noise stripping removes the
/// symbols.
pub fn count_signed_quantities(text: &str) -> SignedQuantities {
    let mut q = SignedQuantities::default();
    for m in quantity_re().find_iter(text) {
        let s = m.as_str();
        let negative = s.starts_with('-');
        let percent = s.ends_with('%');
        match (negative, percent) {
            (false, false) => q.pos_num += 1,
            (true, false) => q.neg_num += 1,
            (false, true) => q.pos_per += 1,
            (true, true) => q.neg_per += 1,
        }
    }
    q
}

/// Like [`count_signed_quantities`], additionally counting quantities
/// followed by a spelled-out currency word ("4.54 euros") as numeric values.
pub fn count_signed_quantities_with_currency_words(text: &str) -> SignedQuantities {
    let mut q = count_signed_quantities(text);
    for m in currency_word_re().find_iter(text) {
        if m.as_str().starts_with('-') {
            q.neg_num += 1;
        } else {
            q.pos_num += 1;
        }
    }
    q
}

/// Number of `#tag` occurrences (not deduplicated).
pub fn count_hashtags(text: &str) -> u32 {
    hashtag_count_re().find_iter(text).count() as u32
}

/// Tokens with at least three syllables.
pub fn complex_word_count(tokens: &[String]) -> u32 {
    tokens.iter().filter(|t| syllable_count(t) >= 3).count() as u32
}

pub fn word_count(tokens: &[String]) -> u32 {
    tokens.len() as u32
}

/// Emotion tag order used throughout the feature vector.
pub const EMOTION_NAMES: [&str; 5] = ["anger", "fear", "happiness", "sadness", "surprise"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AffectEntry {
    pub emotions: [bool; 5],
    pub sentiment: f64,
}

/// Word → (emotion tags, sentiment score) lookup. Entries are normalized the
/// same way post tokens are, so accented source rows match folded tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffectLexicon {
    entries: BTreeMap<String, AffectEntry>,
}

impl AffectLexicon {
    pub fn bundled_spanish() -> Self {
        Self::from_csv_str(include_str!("../../resources/affect_lexicon.csv"))
            .expect("bundled affect lexicon parses")
    }

    /// Parse `word,emotions,sentiment` CSV; the emotions field holds
    /// `;`-separated tags out of anger/fear/happiness/sadness/surprise.
    pub fn from_csv_str(contents: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(contents.as_bytes());
        let mut entries = BTreeMap::new();
        for (idx, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::Invalid(format!("affect lexicon: {e}")))?;
            if row.len() < 3 {
                return Err(Error::Invalid(format!(
                    "affect lexicon row {}: expected word,emotions,sentiment",
                    idx + 1
                )));
            }
            let word = preprocess::normalize_and_tokenize(&row[0], &StopwordList::empty())
                .join(" ");
            if word.is_empty() {
                continue;
            }
            let mut emotions = [false; 5];
            for tag in row[1].split(';').map(str::trim).filter(|t| !t.is_empty()) {
                match EMOTION_NAMES.iter().position(|n| *n == tag) {
                    Some(i) => emotions[i] = true,
                    None => {
                        return Err(Error::Invalid(format!(
                            "affect lexicon row {}: unknown emotion tag {tag:?}",
                            idx + 1
                        )))
                    }
                }
            }
            let sentiment: f64 = row[2].parse().map_err(|_| {
                Error::Invalid(format!(
                    "affect lexicon row {}: bad sentiment {:?}",
                    idx + 1,
                    &row[2]
                ))
            })?;
            entries.insert(word, AffectEntry { emotions, sentiment });
        }
        Ok(AffectLexicon { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_str(&contents)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Emotion flags (true when at least one token carries the tag) and the
    /// sign of the summed token sentiment.
    pub fn annotate(&self, text: &str) -> ([bool; 5], i8) {
        let tokens = preprocess::normalize_and_tokenize(text, &StopwordList::empty());
        let mut emotions = [false; 5];
        let mut total = 0.0;
        for token in &tokens {
            if let Some(entry) = self.entries.get(token) {
                for (flag, tagged) in emotions.iter_mut().zip(entry.emotions) {
                    *flag |= tagged;
                }
                total += entry.sentiment;
            }
        }
        let polarity = if total > 0.0 {
            1
        } else if total < 0.0 {
            -1
        } else {
            0
        };
        (emotions, polarity)
    }
}

/// POS class order of the distribution block.
pub const POS_CLASS_NAMES: [&str; 7] = [
    "adjectives",
    "adverbs",
    "auxiliaries",
    "determiners",
    "nouns",
    "pronouns",
    "punctuation",
];

/// Closed-class dictionary tagger: determiners, pronouns, and auxiliaries by
/// lookup; punctuation by character class; adjectives and adverbs by suffix
/// heuristic; everything else is a noun.
#[derive(Debug, Clone)]
pub struct PosTagger {
    determiners: &'static [&'static str],
    pronouns: &'static [&'static str],
    auxiliaries: &'static [&'static str],
}

const DETERMINERS: &[&str] = &[
    "el", "la", "los", "las", "un", "una", "unos", "unas", "este", "esta", "estos", "estas",
    "ese", "esa", "esos", "esas", "aquel", "aquella", "aquellos", "aquellas", "cada", "varios",
    "varias", "mucho", "mucha", "muchos", "muchas", "poco", "poca", "pocos", "pocas", "todo",
    "toda", "todos", "todas", "otro", "otra", "otros", "otras", "ningun", "ninguna", "algun",
    "alguna",
];

const PRONOUNS: &[&str] = &[
    "yo", "tu", "el", "ella", "usted", "nosotros", "nosotras", "vosotros", "vosotras", "ellos",
    "ellas", "ustedes", "me", "te", "se", "nos", "os", "le", "les", "lo", "mi", "mis", "su",
    "sus", "quien", "quienes", "que", "cual", "cuales", "alguien", "nadie", "algo", "nada",
];

const AUXILIARIES: &[&str] = &[
    "ser", "estar", "haber", "es", "son", "era", "eran", "fue", "fueron", "sera", "seran",
    "esta", "estan", "estaba", "estaban", "estara", "estaran", "ha", "han", "he", "hemos",
    "habia", "habian", "habra", "habran", "sido", "estado", "siendo", "estando", "puede",
    "pueden", "podria", "podrian", "debe", "deben", "deberia", "deberian",
];

const ADJECTIVE_SUFFIXES: &[&str] = &[
    "oso", "osa", "osos", "osas", "ivo", "iva", "ivos", "ivas", "able", "ables", "ible",
    "ibles", "ista", "istas", "al", "ales", "ante", "antes", "ico", "ica", "icos", "icas",
];

impl Default for PosTagger {
    fn default() -> Self {
        PosTagger {
            determiners: DETERMINERS,
            pronouns: PRONOUNS,
            auxiliaries: AUXILIARIES,
        }
    }
}

impl PosTagger {
    /// Class index in [`POS_CLASS_NAMES`] for one token. Lookups run in a
    /// fixed order (punctuation, determiner, pronoun, auxiliary, adverb,
    /// adjective), so ambiguous words resolve deterministically.
    pub fn tag(&self, token: &str) -> usize {
        if !token.chars().any(char::is_alphanumeric) {
            return 6; // punctuation
        }
        if self.determiners.contains(&token) {
            return 3;
        }
        if self.pronouns.contains(&token) {
            return 5;
        }
        if self.auxiliaries.contains(&token) {
            return 2;
        }
        if token.ends_with("mente") {
            return 1; // adverb
        }
        if ADJECTIVE_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return 0;
        }
        4 // noun
    }

    /// Percentage of tokens per POS class; all zeros for an empty list.
    pub fn distribution(&self, tokens: &[String]) -> [f64; 7] {
        let mut counts = [0usize; 7];
        for token in tokens {
            counts[self.tag(token)] += 1;
        }
        let total = tokens.len();
        let mut dist = [0.0; 7];
        if total == 0 {
            return dist;
        }
        for (slot, count) in dist.iter_mut().zip(counts) {
            *slot = count as f64 / total as f64 * 100.0;
        }
        dist
    }
}

/// The scalar feature block. Slot expansion (5 emotion flags, 7 POS
/// percentages) gives [`SCALAR_SLOT_COUNT`] slots in the frozen order of
/// [`SCALAR_SLOT_NAMES`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFeatures {
    pub emotions: [bool; 5],
    pub complex_words: u32,
    pub fre: f64,
    pub hashtags: u32,
    pub mer: f64,
    pub neg_num: u32,
    pub neg_per: u32,
    pub polarity: i8,
    pub pos_dist: [f64; 7],
    pub pos_num: u32,
    pub pos_per: u32,
    pub reading_time_ms: f64,
    pub word_count: u32,
}

pub const SCALAR_SLOT_COUNT: usize = 23;

/// Display names of the scalar slots, in vector order.
pub const SCALAR_SLOT_NAMES: [&str; SCALAR_SLOT_COUNT] = [
    "Emotion (anger)",
    "Emotion (fear)",
    "Emotion (happiness)",
    "Emotion (sadness)",
    "Emotion (surprise)",
    "Complex word counter",
    "FRE",
    "Hashtag counter",
    "MER",
    "Neg. num.",
    "Neg. per.",
    "Polarity",
    "POS dist. (adjectives)",
    "POS dist. (adverbs)",
    "POS dist. (auxiliaries)",
    "POS dist. (determiners)",
    "POS dist. (nouns)",
    "POS dist. (pronouns)",
    "POS dist. (punctuation)",
    "Pos. num.",
    "Pos. per.",
    "Reading time",
    "Word count",
];

impl ScalarFeatures {
    pub fn zeros() -> Self {
        ScalarFeatures {
            emotions: [false; 5],
            complex_words: 0,
            fre: 0.0,
            hashtags: 0,
            mer: 0.0,
            neg_num: 0,
            neg_per: 0,
            polarity: 0,
            pos_dist: [0.0; 7],
            pos_num: 0,
            pos_per: 0,
            reading_time_ms: 0.0,
            word_count: 0,
        }
    }

    /// Flatten into the frozen slot order.
    pub fn to_slots(&self) -> [f64; SCALAR_SLOT_COUNT] {
        let mut slots = [0.0; SCALAR_SLOT_COUNT];
        for (i, flag) in self.emotions.iter().enumerate() {
            slots[i] = f64::from(u8::from(*flag));
        }
        slots[5] = f64::from(self.complex_words);
        slots[6] = self.fre;
        slots[7] = f64::from(self.hashtags);
        slots[8] = self.mer;
        slots[9] = f64::from(self.neg_num);
        slots[10] = f64::from(self.neg_per);
        slots[11] = f64::from(self.polarity);
        slots[12..19].copy_from_slice(&self.pos_dist);
        slots[19] = f64::from(self.pos_num);
        slots[20] = f64::from(self.pos_per);
        slots[21] = self.reading_time_ms;
        slots[22] = f64::from(self.word_count);
        slots
    }
}

/// The three fitted vocabularies backing the textual feature blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularySet {
    pub char_grams: Vocabulary,
    pub word_grams: Vocabulary,
    pub char_wb_grams: Vocabulary,
}

impl VocabularySet {
    /// Fit all three vocabularies over the cleaned corpus.
    pub fn fit(
        docs: &[impl AsRef<str>],
        char_config: &VectorizerConfig,
        word_config: &VectorizerConfig,
        char_wb_config: &VectorizerConfig,
    ) -> Result<Self> {
        Ok(VocabularySet {
            char_grams: fit_vectorizer(docs, char_config)?,
            word_grams: fit_vectorizer(docs, word_config)?,
            char_wb_grams: fit_vectorizer(docs, char_wb_config)?,
        })
    }
}

/// One post's features: scalar block plus the three sparse count blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scalars: ScalarFeatures,
    pub char_counts: SparseCounts,
    pub word_counts: SparseCounts,
    pub char_wb_counts: SparseCounts,
}

/// What a feature index refers to, for explanation rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Scalar,
    CharGram(String),
    WordGram(String),
    CharWbGram(String),
}

/// Fixed index layout of the dense feature vector: scalar slots first, then
/// the char, word, and within-word gram blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub char_terms: Vec<String>,
    pub word_terms: Vec<String>,
    pub char_wb_terms: Vec<String>,
}

impl FeatureLayout {
    pub fn from_vocabularies(vocabs: &VocabularySet) -> Self {
        FeatureLayout {
            char_terms: vocabs
                .char_grams
                .ordered_terms()
                .into_iter()
                .map(str::to_string)
                .collect(),
            word_terms: vocabs
                .word_grams
                .ordered_terms()
                .into_iter()
                .map(str::to_string)
                .collect(),
            char_wb_terms: vocabs
                .char_wb_grams
                .ordered_terms()
                .into_iter()
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        SCALAR_SLOT_COUNT + self.char_terms.len() + self.word_terms.len() + self.char_wb_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Display name for a dense index.
    pub fn name(&self, index: usize) -> String {
        match self.kind(index) {
            Some(FeatureKind::Scalar) => SCALAR_SLOT_NAMES[index].to_string(),
            Some(FeatureKind::CharGram(g)) => format!("char-gram {g:?}"),
            Some(FeatureKind::WordGram(g)) => format!("word-gram {g:?}"),
            Some(FeatureKind::CharWbGram(g)) => format!("word-token gram {g:?}"),
            None => format!("feature {index}"),
        }
    }

    pub fn kind(&self, index: usize) -> Option<FeatureKind> {
        if index < SCALAR_SLOT_COUNT {
            return Some(FeatureKind::Scalar);
        }
        let mut rest = index - SCALAR_SLOT_COUNT;
        if rest < self.char_terms.len() {
            return Some(FeatureKind::CharGram(self.char_terms[rest].clone()));
        }
        rest -= self.char_terms.len();
        if rest < self.word_terms.len() {
            return Some(FeatureKind::WordGram(self.word_terms[rest].clone()));
        }
        rest -= self.word_terms.len();
        if rest < self.char_wb_terms.len() {
            return Some(FeatureKind::CharWbGram(self.char_wb_terms[rest].clone()));
        }
        None
    }

    /// Densify a feature vector into `self.len()` slots.
    pub fn dense(&self, fv: &FeatureVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&fv.scalars.to_slots());
        let mut block = vec![0.0; self.char_terms.len()];
        for (i, c) in fv.char_counts.iter() {
            block[i as usize] = f64::from(c);
        }
        out.extend_from_slice(&block);
        let mut block = vec![0.0; self.word_terms.len()];
        for (i, c) in fv.word_counts.iter() {
            block[i as usize] = f64::from(c);
        }
        out.extend_from_slice(&block);
        let mut block = vec![0.0; self.char_wb_terms.len()];
        for (i, c) in fv.char_wb_counts.iter() {
            block[i as usize] = f64::from(c);
        }
        out.extend_from_slice(&block);
        out
    }
}

/// Scalar-feature resources and switches.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub affect: AffectLexicon,
    pub tagger: PosTagger,
    pub flesch: FleschCoefficients,
    /// When set, quantities followed by a currency word ("4.54 euros") also
    /// count toward the numeric counters. Off by default: the stock counters
    /// look for symbol-suffixed quantities only.
    pub count_currency_words: bool,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        FeatureExtractor {
            affect: AffectLexicon::bundled_spanish(),
            tagger: PosTagger::default(),
            flesch: FleschCoefficients::default(),
            count_currency_words: false,
        }
    }
}

impl FeatureExtractor {
    /// Compute the scalar block for one post.
    ///
    /// Input selection is frozen: hashtag and signed-quantity counters read
    /// the raw text (the symbols they match are stripped later); readability,
    /// reading time, affect, and the POS distribution read the noise-stripped
    /// text (with a stopword-free tokenization so closed-class words are
    /// still taggable); complex-word and word counts read the final cleaned
    /// tokens. Degenerate readability inputs score 0 here so one empty post
    /// cannot abort batch featurization.
    pub fn scalars(&self, raw_text: &str, clean: &CleanPost) -> ScalarFeatures {
        let stripped = preprocess::strip_noise(raw_text);
        let unfiltered = preprocess::normalize_and_tokenize(&stripped, &StopwordList::empty());
        let (emotions, polarity) = self.affect.annotate(&stripped);
        let quantities = if self.count_currency_words {
            count_signed_quantities_with_currency_words(raw_text)
        } else {
            count_signed_quantities(raw_text)
        };
        ScalarFeatures {
            emotions,
            complex_words: complex_word_count(&clean.tokens),
            fre: flesch_reading_ease_with(&stripped, &self.flesch).unwrap_or(0.0),
            hashtags: count_hashtags(raw_text),
            mer: mcalpine_eflaw(&stripped).unwrap_or(0.0),
            neg_num: quantities.neg_num,
            neg_per: quantities.neg_per,
            polarity,
            pos_dist: self.tagger.distribution(&unfiltered),
            pos_num: quantities.pos_num,
            pos_per: quantities.pos_per,
            reading_time_ms: reading_time_ms(&stripped),
            word_count: word_count(&clean.tokens),
        }
    }
}

/// Assemble the full feature vector: scalar block plus the three count
/// blocks, in the frozen declared order.
pub fn build_feature_vector(
    extractor: &FeatureExtractor,
    raw_text: &str,
    clean: &CleanPost,
    vocabs: &VocabularySet,
) -> FeatureVector {
    FeatureVector {
        scalars: extractor.scalars(raw_text, clean),
        char_counts: vectorize(&clean.clean_text, &vocabs.char_grams),
        word_counts: vectorize(&clean.clean_text, &vocabs.word_grams),
        char_wb_counts: vectorize(&clean.clean_text, &vocabs.char_wb_grams),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fre_hand_values() {
        // 1 sentence, 10 monosyllabic words plus 5 extra vowel groups =
        // 15 syllables over 10 words.
        let text = "go go go go go go go go go pepepepepepe.";
        let words: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(words.len(), 10);
        let syl: usize = words.iter().map(|w| syllable_count(w)).sum();
        assert_eq!(syl, 15);
        let fre = flesch_reading_ease(text).unwrap();
        assert!((fre - 69.785).abs() < 1e-9, "{fre}");
    }

    #[test]
    fn fre_single_monosyllable() {
        let fre = flesch_reading_ease("go").unwrap();
        assert!((fre - 121.22).abs() < 1e-9, "{fre}");
    }

    #[test]
    fn fre_empty_errors() {
        assert!(flesch_reading_ease("").is_err());
    }

    #[test]
    fn eflaw_hand_value() {
        // 10 words, 4 of them <=3 chars, 2 sentences -> (10+4)/2 = 7
        let text = "uno dos pez mar grande grande grande grande. grande grande.";
        let words: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(words.len(), 10);
        let mini = words.iter().filter(|w| w.chars().count() <= 3).count();
        assert_eq!(mini, 4);
        assert_eq!(sentence_count(text), 2);
        assert!((mcalpine_eflaw(text).unwrap() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn eflaw_single_miniword() {
        assert!((mcalpine_eflaw("go").unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eflaw_empty_errors() {
        assert!(mcalpine_eflaw("  ").is_err());
    }

    #[test]
    fn reading_time_values() {
        let hundred = "a".repeat(100);
        assert!((reading_time_ms(&hundred) - 1469.0).abs() < 1e-9);
        assert_eq!(reading_time_ms(""), 0.0);
        assert!((reading_time_ms("ab") - 29.38).abs() < 1e-9);
    }

    #[test]
    fn signed_quantities_percentages() {
        let q = count_signed_quantities("up 3% then -2%");
        assert_eq!((q.pos_num, q.neg_num, q.pos_per, q.neg_per), (0, 0, 1, 1));
    }

    #[test]
    fn signed_quantities_currency_symbol() {
        let q = count_signed_quantities("at 14,73€");
        assert_eq!((q.pos_num, q.neg_num, q.pos_per, q.neg_per), (1, 0, 0, 0));
    }

    #[test]
    fn signed_quantities_none() {
        let q = count_signed_quantities("no figures");
        assert_eq!((q.pos_num, q.neg_num, q.pos_per, q.neg_per), (0, 0, 0, 0));
    }

    #[test]
    fn signed_quantities_currency_words_flag() {
        let text = "monitoring 4.54 euros at close";
        assert_eq!(count_signed_quantities(text).pos_num, 0);
        assert_eq!(
            count_signed_quantities_with_currency_words(text).pos_num,
            1
        );
    }

    #[test]
    fn hashtag_counting() {
        assert_eq!(count_hashtags("#IBEX #SAN"), 2);
        assert_eq!(count_hashtags(""), 0);
        assert_eq!(count_hashtags("c# code"), 0);
    }

    #[test]
    fn affect_single_entry() {
        let lex = AffectLexicon::from_csv_str("word,emotions,sentiment\nalegre,happiness,1\n")
            .unwrap();
        let (emotions, polarity) = lex.annotate("muy alegre hoy");
        assert_eq!(emotions, [false, false, true, false, false]);
        assert_eq!(polarity, 1);
    }

    #[test]
    fn affect_neutral_text() {
        let lex = AffectLexicon::bundled_spanish();
        let (emotions, polarity) = lex.annotate("texto sin nada medible");
        assert_eq!(emotions, [false; 5]);
        assert_eq!(polarity, 0);
    }

    #[test]
    fn affect_balanced_polarity() {
        let lex = AffectLexicon::from_csv_str(
            "word,emotions,sentiment\nbueno,,1\nmalo,,-1\n",
        )
        .unwrap();
        let (_, polarity) = lex.annotate("bueno y malo");
        assert_eq!(polarity, 0);
    }

    #[test]
    fn pos_distribution_determiner_noun() {
        let tagger = PosTagger::default();
        let tokens = vec!["el".to_string(), "mercado".to_string()];
        let dist = tagger.distribution(&tokens);
        assert_eq!(dist, [0.0, 0.0, 0.0, 50.0, 50.0, 0.0, 0.0]);
    }

    #[test]
    fn pos_distribution_empty() {
        let tagger = PosTagger::default();
        assert_eq!(tagger.distribution(&[]), [0.0; 7]);
    }

    #[test]
    fn pos_distribution_residual_nouns() {
        let tagger = PosTagger::default();
        let tokens: Vec<String> = ["mercado", "bolsa", "valor", "dinero"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let dist = tagger.distribution(&tokens);
        assert_eq!(dist[4], 100.0);
        assert_eq!(dist.iter().sum::<f64>(), 100.0);
    }

    #[test]
    fn complex_word_counting() {
        assert_eq!(complex_word_count(&["alcista".to_string()]), 1);
        assert_eq!(syllable_count("alcista"), 3);
        assert_eq!(complex_word_count(&[]), 0);
        let short = vec!["si".to_string(), "no".to_string()];
        assert_eq!(complex_word_count(&short), 0);
        assert_eq!(word_count(&short), 2);
    }

    #[test]
    fn scalar_slots_are_frozen() {
        let mut scalars = ScalarFeatures::zeros();
        scalars.emotions[2] = true;
        scalars.fre = 50.0;
        scalars.pos_num = 2;
        let slots = scalars.to_slots();
        assert_eq!(slots.len(), SCALAR_SLOT_COUNT);
        assert_eq!(slots[2], 1.0);
        assert_eq!(slots[6], 50.0);
        assert_eq!(slots[19], 2.0);
        assert_eq!(SCALAR_SLOT_NAMES[19], "Pos. num.");
    }

    #[test]
    fn fre_decreases_with_syllable_density() {
        // words/sentences fixed at 4; syllables/word grows
        let light = "go go go go.";
        let heavy = "pepe pepe pepe pepe.";
        let heavier = "pepepe pepepe pepepe pepepe.";
        let f1 = flesch_reading_ease(light).unwrap();
        let f2 = flesch_reading_ease(heavy).unwrap();
        let f3 = flesch_reading_ease(heavier).unwrap();
        assert!(f1 > f2 && f2 > f3);
    }
}
