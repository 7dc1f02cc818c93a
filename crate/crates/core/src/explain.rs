//! Natural-language explanations.
//!
//! Stage-1 (lexicon) classifications are explained by the matched terms
//! alone. Stage-2 (model) classifications get a model-agnostic local
//! surrogate: active features of the vector are randomly zeroed, the
//! black-box score of the predicted class is collected for each perturbed
//! sample, and a weighted ridge regression on the keep/remove masks yields
//! per-feature attributions. Char-gram features are mapped back to the most
//! frequent corpus word containing them before rendering.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassificationSource, Classifier, HybridOutcome, TrainedModel};
use crate::corpus::Category;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureLayout};

/// Perturbed samples of one feature vector plus their keep-masks over the
/// active features. The unperturbed point is always sample 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSet {
    /// Dense indices of the non-zero features being perturbed.
    pub active: Vec<usize>,
    pub samples: Vec<Vec<f64>>,
    /// `masks[s][j]` is true when active feature `j` survives in sample `s`.
    pub masks: Vec<Vec<bool>>,
}

/// Zero random subsets of the active features. Each active feature is kept
/// with probability 1/2 independently per sample.
pub fn perturb(x: &[f64], n: usize, seed: u64) -> Result<PerturbationSet> {
    if n < 50 {
        return Err(Error::Explain(format!(
            "at least 50 perturbation samples required, got {n}"
        )));
    }
    let active: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    if active.is_empty() {
        return Err(Error::Explain("nothing to perturb".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    samples.push(x.to_vec());
    masks.push(vec![true; active.len()]);
    for _ in 1..n {
        let mask: Vec<bool> = active.iter().map(|_| rng.gen_bool(0.5)).collect();
        let mut sample = x.to_vec();
        for (&feature, keep) in active.iter().zip(&mask) {
            if !keep {
                sample[feature] = 0.0;
            }
        }
        samples.push(sample);
        masks.push(mask);
    }
    Ok(PerturbationSet {
        active,
        samples,
        masks,
    })
}

/// One feature's contribution toward the predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub feature_index: usize,
    pub feature_name: String,
    pub weight: f64,
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Fit the local surrogate: a ridge regression of black-box scores on the
/// keep-masks, weighted by `exp(-d²/width²)` where `d` is the fraction of
/// active features removed. Weights are normalized to sum to one, so
/// duplicating the sample set leaves the fit unchanged. The intercept is not
/// regularized, so a mask column that never varies gets coefficient zero.
pub fn fit_surrogate(
    score: impl Fn(&[f64]) -> f64,
    set: &PerturbationSet,
    kernel_width: Option<f64>,
    ridge_lambda: f64,
    name_of: impl Fn(usize) -> String,
) -> Vec<Attribution> {
    let m = set.active.len();
    let width = kernel_width.unwrap_or_else(|| 0.75 * (m as f64).sqrt()).max(1e-9);

    let scores: Vec<f64> = set.samples.iter().map(|s| score(s)).collect();
    let mut weights: Vec<f64> = set
        .masks
        .iter()
        .map(|mask| {
            let removed = mask.iter().filter(|kept| !**kept).count() as f64;
            let d = removed / m as f64;
            (-d * d / (width * width)).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    // normal equations over [intercept, mask...]
    let dim = m + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for ((mask, &w), &y) in set.masks.iter().zip(&weights).zip(&scores) {
        let mut z = Vec::with_capacity(dim);
        z.push(1.0);
        z.extend(mask.iter().map(|&kept| f64::from(u8::from(kept))));
        for i in 0..dim {
            if z[i] == 0.0 {
                continue;
            }
            b[i] += w * z[i] * y;
            for j in 0..dim {
                a[i][j] += w * z[i] * z[j];
            }
        }
    }
    for i in 1..dim {
        a[i][i] += ridge_lambda;
    }

    let beta = solve_linear(a, b).unwrap_or_else(|| vec![0.0; dim]);
    set.active
        .iter()
        .zip(beta.into_iter().skip(1))
        .map(|(&feature_index, weight)| Attribution {
            feature_index,
            feature_name: name_of(feature_index),
            weight,
        })
        .collect()
}

/// The k most influential features by |weight|, ties broken by the frozen
/// feature order. `degenerate` marks the all-zero-weight case, where the
/// result is simply the first k features in frozen order.
#[derive(Debug, Clone, PartialEq)]
pub struct TopFeatures {
    pub attributions: Vec<Attribution>,
    pub degenerate: bool,
}

pub fn top_features(attributions: &[Attribution], k: usize) -> TopFeatures {
    let mut ranked: Vec<Attribution> = attributions.to_vec();
    ranked.sort_by(|a, b| {
        b.weight
            .abs()
            .total_cmp(&a.weight.abs())
            .then(a.feature_index.cmp(&b.feature_index))
    });
    ranked.truncate(k);
    TopFeatures {
        degenerate: attributions.iter().all(|a| a.weight == 0.0),
        attributions: ranked,
    }
}

/// Map a char-gram to the most frequent corpus word containing it as a
/// substring (boundary spaces trimmed first). Frequency ties go to the
/// lexicographically smaller word; grams contained nowhere pass through.
pub fn chargram_to_word(gram: &str, term_freqs: &BTreeMap<String, u64>) -> String {
    let needle = gram.trim();
    if needle.is_empty() {
        return gram.to_string();
    }
    let mut best: Option<(&str, u64)> = None;
    for (word, &freq) in term_freqs {
        if !word.contains(needle) {
            continue;
        }
        // map iteration is lexicographic, so strict improvement keeps the
        // smaller word on frequency ties
        if best.map_or(true, |(_, f)| freq > f) {
            best = Some((word, freq));
        }
    }
    best.map_or_else(|| gram.to_string(), |(word, _)| word.to_string())
}

/// Two-sentence explanation template. The second sentence is omitted when
/// the feature list is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationTemplate {
    pub terms_sentence: String,
    pub features_sentence: String,
}

impl Default for ExplanationTemplate {
    fn default() -> Self {
        ExplanationTemplate {
            terms_sentence: "The classification of the post \"<tweet>\" as <category> can be \
                             explained by the presence of these terms: <terms>."
                .into(),
            features_sentence: "Additionally, the process considered the following features: \
                                <features>."
                .into(),
        }
    }
}

impl ExplanationTemplate {
    /// Load from a file holding the terms sentence on the first line and the
    /// features sentence on the second.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut lines = contents.lines().filter(|l| !l.trim().is_empty());
        let terms_sentence = lines
            .next()
            .ok_or_else(|| Error::Invalid("template file is empty".into()))?
            .to_string();
        let features_sentence = lines
            .next()
            .ok_or_else(|| Error::Invalid("template file needs a features sentence".into()))?
            .to_string();
        Ok(ExplanationTemplate {
            terms_sentence,
            features_sentence,
        })
    }
}

fn quoted_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|t| format!("'{t}'")).collect();
    format!("[{}]", inner.join(", "))
}

/// Instantiate the template. Pure: identical inputs render identical bytes.
pub fn render(
    template: &ExplanationTemplate,
    tweet: &str,
    category: Category,
    terms: &[String],
    feature_names: &[String],
) -> String {
    let substitute = |sentence: &str| {
        sentence
            .replace("<tweet>", tweet)
            .replace("<category>", &category.to_string())
            .replace("<terms>", &quoted_list(terms))
            .replace("<features>", &quoted_list(feature_names))
    };
    let mut text = substitute(&template.terms_sentence);
    if !feature_names.is_empty() {
        text.push(' ');
        text.push_str(&substitute(&template.features_sentence));
    }
    text
}

/// Surrogate and rendering knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    /// Perturbation samples per explained post.
    pub samples: usize,
    /// Features surfaced per explanation.
    pub top_k: usize,
    /// Kernel width; `None` derives `0.75 * sqrt(active features)`.
    pub kernel_width: Option<f64>,
    pub ridge_lambda: f64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            samples: 200,
            top_k: 5,
            kernel_width: None,
            ridge_lambda: 1e-3,
        }
    }
}

/// A rendered explanation for one classified post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub post_id: String,
    pub category: Category,
    pub source: ClassificationSource,
    /// Lexicon terms (stage 1) or surrogate-selected textual terms (stage 2).
    pub terms: Vec<String>,
    /// Human-readable names of the non-textual features the surrogate
    /// surfaced; empty for stage-1 explanations.
    pub features: Vec<String>,
    pub text: String,
}

/// Explain one hybrid classification.
///
/// Lexicon-sourced posts never touch the surrogate: their matched terms are
/// rendered directly. Model-sourced posts run the perturbation + ridge
/// surrogate; textual features surface in the terms clause (char-grams mapped
/// to words), scalar features in the features clause.
#[allow(clippy::too_many_arguments)]
pub fn explain_post(
    post_id: &str,
    raw_text: &str,
    outcome: &HybridOutcome,
    dense: &[f64],
    model: &TrainedModel,
    layout: &FeatureLayout,
    term_freqs: &BTreeMap<String, u64>,
    template: &ExplanationTemplate,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<Explanation> {
    let (terms, features) = match outcome.source {
        ClassificationSource::Lexicon => (outcome.matched_terms.clone(), Vec::new()),
        ClassificationSource::Ml => {
            match perturb(dense, config.samples, seed) {
                // an all-zero vector (empty post) has nothing to attribute
                Err(Error::Explain(_)) => (Vec::new(), Vec::new()),
                Err(e) => return Err(e),
                Ok(set) => {
                    let class_index = model
                        .classes()
                        .iter()
                        .position(|c| *c == outcome.category)
                        .ok_or_else(|| {
                            Error::Explain(format!(
                                "category {} missing from model classes",
                                outcome.category
                            ))
                        })?;
                    let attributions = fit_surrogate(
                        |sample| {
                            model
                                .class_scores(sample)
                                .map(|scores| scores[class_index])
                                .unwrap_or(0.0)
                        },
                        &set,
                        config.kernel_width,
                        config.ridge_lambda,
                        |index| layout.name(index),
                    );
                    let top = top_features(&attributions, config.top_k);
                    let mut terms = Vec::new();
                    let mut features = Vec::new();
                    for attribution in &top.attributions {
                        match layout.kind(attribution.feature_index) {
                            Some(FeatureKind::Scalar) => {
                                features.push(attribution.feature_name.clone());
                            }
                            Some(FeatureKind::WordGram(gram)) => {
                                if !terms.contains(&gram) {
                                    terms.push(gram);
                                }
                            }
                            Some(FeatureKind::CharGram(gram))
                            | Some(FeatureKind::CharWbGram(gram)) => {
                                let word = chargram_to_word(&gram, term_freqs);
                                if !terms.contains(&word) {
                                    terms.push(word);
                                }
                            }
                            None => {}
                        }
                    }
                    (terms, features)
                }
            }
        }
    };

    let text = render(template, raw_text, outcome.category, &terms, &features);
    Ok(Explanation {
        post_id: post_id.to_string(),
        category: outcome.category,
        source: outcome.source,
        terms,
        features,
        text,
    })
}
