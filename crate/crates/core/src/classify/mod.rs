//! Supervised classifiers and the hybrid lexicon → ML pipeline.
//!
//! Five algorithms are available: multinomial and complement naive Bayes,
//! k-nearest neighbors, a single decision tree, and a random forest. Every
//! tie-break in the stack uses the frozen class order (drop < rise < other),
//! and all randomness flows from explicit seeds, so training twice with the
//! same seed yields byte-identical models.

pub mod forest;
pub mod knn;
pub mod nb;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::error::{Error, Result};
use crate::lexicon::{match_lexicon, CategoryLexicons};
use forest::ForestModel;
use knn::{KnnModel, KnnWeights};
use nb::{log_scores_to_probabilities, ComplementNb, MultinomialNb};
use tree::{Criterion, MaxFeatures, SampleCount, Splitter, TreeModel, TreeParams};

pub use tree::argmax;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mnb,
    Cnb,
    Knn,
    Dt,
    Rf,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algorithm::Mnb => "mnb",
            Algorithm::Cnb => "cnb",
            Algorithm::Knn => "knn",
            Algorithm::Dt => "dt",
            Algorithm::Rf => "rf",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "mnb" => Ok(Algorithm::Mnb),
            "cnb" => Ok(Algorithm::Cnb),
            "knn" => Ok(Algorithm::Knn),
            "dt" => Ok(Algorithm::Dt),
            "rf" => Ok(Algorithm::Rf),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// A hyperparameter value as it appears in grid files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Null,
}

impl HyperValue {
    fn as_f64(&self) -> Option<f64> {
        match self {
            HyperValue::Int(i) => Some(*i as f64),
            HyperValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    fn as_bool(&self) -> Option<bool> {
        match self {
            HyperValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn as_usize(&self) -> Option<usize> {
        match self {
            HyperValue::Int(i) if *i >= 0 => Some(*i as usize),
            _ => None,
        }
    }

    fn as_str(&self) -> Option<&str> {
        match self {
            HyperValue::Text(s) => Some(s),
            _ => None,
        }
    }

    fn is_null(&self) -> bool {
        matches!(self, HyperValue::Null)
    }
}

/// Algorithm plus hyperparameters. Unknown hyperparameter names are rejected
/// at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, HyperValue>,
}

fn allowed_names(algorithm: Algorithm) -> &'static [&'static str] {
    match algorithm {
        Algorithm::Mnb => &["alpha", "fit_prior"],
        Algorithm::Cnb => &["alpha", "fit_prior", "norm"],
        Algorithm::Knn => &[
            "n_neighbors",
            "weights",
            "algorithm",
            "leaf_size",
            "p",
            "metric",
        ],
        Algorithm::Dt => &[
            "criterion",
            "splitter",
            "class_weight",
            "max_features",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
        ],
        Algorithm::Rf => &[
            "n_estimators",
            "criterion",
            "class_weight",
            "max_features",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
        ],
    }
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        ModelSpec {
            algorithm,
            hyperparameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: HyperValue) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    /// The tuned configuration shipped as default for each algorithm.
    pub fn tuned(algorithm: Algorithm) -> Self {
        use HyperValue as V;
        let spec = ModelSpec::new(algorithm);
        match algorithm {
            Algorithm::Mnb => spec
                .with("alpha", V::Float(0.25))
                .with("fit_prior", V::Bool(true)),
            Algorithm::Cnb => spec
                .with("alpha", V::Float(0.25))
                .with("fit_prior", V::Bool(true))
                .with("norm", V::Bool(false)),
            Algorithm::Knn => spec
                .with("n_neighbors", V::Int(10))
                .with("weights", V::Text("distance".into()))
                .with("algorithm", V::Text("kd_tree".into()))
                .with("leaf_size", V::Int(10))
                .with("p", V::Int(1))
                .with("metric", V::Text("minkowski".into())),
            Algorithm::Dt => spec
                .with("criterion", V::Text("gini".into()))
                .with("splitter", V::Text("best".into()))
                .with("class_weight", V::Null)
                .with("max_features", V::Text("sqrt".into()))
                .with("max_depth", V::Int(100))
                .with("min_samples_split", V::Float(0.01))
                .with("min_samples_leaf", V::Int(1)),
            Algorithm::Rf => spec
                .with("n_estimators", V::Int(250))
                .with("criterion", V::Text("gini".into()))
                .with("class_weight", V::Null)
                .with("max_features", V::Text("sqrt".into()))
                .with("max_depth", V::Int(50))
                .with("min_samples_split", V::Float(0.001))
                .with("min_samples_leaf", V::Float(0.0001)),
        }
    }

    /// The benchmark hyperparameter grid for each algorithm.
    pub fn reference_grid(algorithm: Algorithm) -> Vec<(String, Vec<HyperValue>)> {
        use HyperValue as V;
        let txt = |values: &[&str]| -> Vec<HyperValue> {
            values.iter().map(|v| V::Text((*v).into())).collect()
        };
        let floats =
            |values: &[f64]| -> Vec<HyperValue> { values.iter().map(|v| V::Float(*v)).collect() };
        let ints =
            |values: &[i64]| -> Vec<HyperValue> { values.iter().map(|v| V::Int(*v)).collect() };
        match algorithm {
            Algorithm::Mnb => vec![
                ("alpha".into(), floats(&[0.0, 0.25, 0.5, 0.75, 1.0])),
                ("fit_prior".into(), vec![V::Bool(true), V::Bool(false)]),
            ],
            Algorithm::Cnb => vec![
                ("alpha".into(), floats(&[0.0, 0.25, 0.5, 0.75, 1.0])),
                ("fit_prior".into(), vec![V::Bool(true), V::Bool(false)]),
                ("norm".into(), vec![V::Bool(true), V::Bool(false)]),
            ],
            Algorithm::Knn => vec![
                ("n_neighbors".into(), ints(&[5, 10, 25])),
                ("weights".into(), txt(&["uniform", "distance"])),
                (
                    "algorithm".into(),
                    txt(&["auto", "ball_tree", "kd_tree", "brute"]),
                ),
                ("leaf_size".into(), ints(&[5, 10, 15, 25, 30, 50])),
                ("p".into(), ints(&[1, 2])),
                ("metric".into(), txt(&["minkowski"])),
            ],
            Algorithm::Dt => vec![
                ("criterion".into(), txt(&["gini", "entropy"])),
                ("splitter".into(), txt(&["best", "random"])),
                (
                    "class_weight".into(),
                    vec![V::Null, V::Text("balanced".into())],
                ),
                (
                    "max_features".into(),
                    vec![V::Null, V::Text("sqrt".into()), V::Text("log2".into())],
                ),
                ("max_depth".into(), ints(&[5, 10, 50, 100])),
                (
                    "min_samples_split".into(),
                    floats(&[0.0001, 0.001, 0.01, 0.1, 1.0]),
                ),
                (
                    "min_samples_leaf".into(),
                    vec![
                        V::Float(0.0001),
                        V::Float(0.001),
                        V::Float(0.01),
                        V::Float(0.1),
                        V::Int(1),
                    ],
                ),
            ],
            Algorithm::Rf => vec![
                ("n_estimators".into(), ints(&[50, 100, 250, 500, 1000])),
                ("criterion".into(), txt(&["gini", "entropy"])),
                (
                    "class_weight".into(),
                    vec![V::Null, V::Text("balanced".into())],
                ),
                (
                    "max_features".into(),
                    vec![V::Null, V::Text("sqrt".into()), V::Text("log2".into())],
                ),
                ("max_depth".into(), ints(&[5, 10, 50, 100])),
                (
                    "min_samples_split".into(),
                    floats(&[0.0001, 0.001, 0.01, 0.1, 1.0]),
                ),
                (
                    "min_samples_leaf".into(),
                    vec![
                        V::Float(0.0001),
                        V::Float(0.001),
                        V::Float(0.01),
                        V::Float(0.1),
                        V::Int(1),
                    ],
                ),
            ],
        }
    }

    /// Reject unknown hyperparameter names for the algorithm.
    pub fn validate(&self) -> Result<()> {
        let allowed = allowed_names(self.algorithm);
        for name in self.hyperparameters.keys() {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown hyperparameter {name:?} for {}",
                    self.algorithm
                )));
            }
        }
        Ok(())
    }

    fn f64_or(&self, name: &str, default: f64) -> Result<f64> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Config(format!("{name} must be a number"))),
        }
    }

    fn bool_or(&self, name: &str, default: bool) -> Result<bool> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| Error::Config(format!("{name} must be a boolean"))),
        }
    }

    fn usize_or(&self, name: &str, default: usize) -> Result<usize> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_usize()
                .ok_or_else(|| Error::Config(format!("{name} must be a non-negative integer"))),
        }
    }

    fn str_or(&self, name: &str, default: &str, allowed: &[&str]) -> Result<String> {
        let value = match self.hyperparameters.get(name) {
            None => default.to_string(),
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::Config(format!("{name} must be a string")))?
                .to_string(),
        };
        if !allowed.contains(&value.as_str()) {
            return Err(Error::Config(format!(
                "{name} must be one of {allowed:?}, got {value:?}"
            )));
        }
        Ok(value)
    }

    fn sample_count(&self, name: &str, default: SampleCount, floor: usize) -> Result<SampleCount> {
        let Some(value) = self.hyperparameters.get(name) else {
            return Ok(default);
        };
        match value {
            // Integers at or above the floor are absolute counts; an integer
            // below it (the grids use 1 for min_samples_split) reads as the
            // 100% fraction, matching the float interpretation.
            HyperValue::Int(i) if *i >= floor as i64 => Ok(SampleCount::Absolute(*i as usize)),
            HyperValue::Int(i) if *i >= 1 => Ok(SampleCount::Fraction(1.0)),
            HyperValue::Float(f) if *f > 0.0 && *f <= 1.0 => Ok(SampleCount::Fraction(*f)),
            _ => Err(Error::Config(format!(
                "{name} must be a positive count or a fraction in (0, 1]"
            ))),
        }
    }

    fn tree_params(&self, n_training: usize) -> Result<TreeParams> {
        let _ = n_training;
        let criterion = match self.str_or("criterion", "gini", &["gini", "entropy"])?.as_str() {
            "entropy" => Criterion::Entropy,
            _ => Criterion::Gini,
        };
        let splitter = if self.algorithm == Algorithm::Dt {
            match self.str_or("splitter", "best", &["best", "random"])?.as_str() {
                "random" => Splitter::Random,
                _ => Splitter::Best,
            }
        } else {
            Splitter::Best
        };
        let max_features = match self.hyperparameters.get("max_features") {
            None => MaxFeatures::Sqrt,
            Some(v) if v.is_null() => MaxFeatures::All,
            Some(v) => match v.as_str() {
                Some("sqrt") => MaxFeatures::Sqrt,
                Some("log2") => MaxFeatures::Log2,
                _ => {
                    return Err(Error::Config(
                        "max_features must be null, \"sqrt\", or \"log2\"".into(),
                    ))
                }
            },
        };
        let max_depth = self.usize_or("max_depth", 100)?;
        if max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(TreeParams {
            criterion,
            splitter,
            max_features,
            max_depth,
            min_samples_split: self.sample_count(
                "min_samples_split",
                SampleCount::Absolute(2),
                2,
            )?,
            min_samples_leaf: self.sample_count("min_samples_leaf", SampleCount::Absolute(1), 1)?,
        })
    }

    fn class_weights(&self, counts: &[usize]) -> Result<Vec<f64>> {
        let balanced = match self.hyperparameters.get("class_weight") {
            None => false,
            Some(v) if v.is_null() => false,
            Some(v) => match v.as_str() {
                Some("balanced") => true,
                _ => {
                    return Err(Error::Config(
                        "class_weight must be null or \"balanced\"".into(),
                    ))
                }
            },
        };
        let n: usize = counts.iter().sum();
        Ok(counts
            .iter()
            .map(|&c| {
                if balanced {
                    n as f64 / (counts.len() as f64 * c as f64)
                } else {
                    1.0
                }
            })
            .collect())
    }
}

/// Learned parameters, by algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Mnb(MultinomialNb),
    Cnb(ComplementNb),
    Knn(KnnModel),
    Dt(TreeModel),
    Rf(ForestModel),
}

/// A trained classifier with its spec and class table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: ModelSpec,
    /// Classes present at training time, in frozen order.
    pub classes: Vec<Category>,
    pub n_features: usize,
    pub params: ModelParams,
}

/// Anything that can classify a dense feature row. The hybrid pipeline takes
/// this as a trait object so tests can observe whether the model was invoked.
pub trait Classifier {
    fn classes(&self) -> &[Category];
    fn predict(&self, x: &[f64]) -> Result<(Category, Vec<f64>)>;
}

impl TrainedModel {
    /// Scores per class (probabilities for NB, weight fractions for kNN,
    /// leaf fractions for DT, vote fractions for RF).
    pub fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Predict(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let scores = match &self.params {
            ModelParams::Mnb(m) => log_scores_to_probabilities(&m.joint_log_likelihood(x)),
            ModelParams::Cnb(m) => log_scores_to_probabilities(&m.joint_log_likelihood(x)),
            ModelParams::Knn(m) => m.class_scores(x, self.classes.len()),
            ModelParams::Dt(m) => {
                let weights = m.leaf_weights(x);
                let total: f64 = weights.iter().sum();
                weights.iter().map(|w| w / total.max(f64::MIN_POSITIVE)).collect()
            }
            ModelParams::Rf(m) => m.class_scores(x),
        };
        Ok(scores)
    }

    /// The underlying forest, when this model is one.
    pub fn forest(&self) -> Option<&ForestModel> {
        match &self.params {
            ModelParams::Rf(f) => Some(f),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("serialize model: {e}")))
    }

    pub fn from_json(contents: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(contents)
            .map_err(|e| Error::Invalid(format!("parse model: {e}")))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

impl Classifier for TrainedModel {
    fn classes(&self) -> &[Category] {
        &self.classes
    }

    fn predict(&self, x: &[f64]) -> Result<(Category, Vec<f64>)> {
        let scores = self.class_scores(x)?;
        Ok((self.classes[argmax(&scores)], scores))
    }
}

/// Train a model. Deterministic for a fixed seed.
pub fn train(
    spec: &ModelSpec,
    x: &[Vec<f64>],
    y: &[Category],
    seed: u64,
) -> Result<TrainedModel> {
    spec.validate()?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Train(format!(
            "feature/label length mismatch ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n_features = x[0].len();
    if x.iter().any(|row| row.len() != n_features) {
        return Err(Error::Train("ragged feature matrix".into()));
    }

    let class_set: BTreeSet<Category> = y.iter().copied().collect();
    let classes: Vec<Category> = class_set.into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::Train(
            "degenerate single-class training set".into(),
        ));
    }
    let y_idx: Vec<usize> = y
        .iter()
        .map(|label| classes.iter().position(|c| c == label).unwrap())
        .collect();
    let mut class_counts = vec![0usize; classes.len()];
    for &i in &y_idx {
        class_counts[i] += 1;
    }

    let params = match spec.algorithm {
        Algorithm::Mnb | Algorithm::Cnb => {
            if x.iter().any(|row| row.iter().any(|v| *v < 0.0)) {
                return Err(Error::Train(
                    "naive Bayes requires non-negative feature values".into(),
                ));
            }
            let alpha = spec.f64_or("alpha", 0.25)?;
            if alpha < 0.0 {
                return Err(Error::Config("alpha must be non-negative".into()));
            }
            let fit_prior = spec.bool_or("fit_prior", true)?;
            if spec.algorithm == Algorithm::Mnb {
                ModelParams::Mnb(MultinomialNb::fit(
                    x,
                    &y_idx,
                    classes.len(),
                    n_features,
                    alpha,
                    fit_prior,
                ))
            } else {
                let norm = spec.bool_or("norm", false)?;
                ModelParams::Cnb(ComplementNb::fit(
                    x,
                    &y_idx,
                    classes.len(),
                    n_features,
                    alpha,
                    fit_prior,
                    norm,
                ))
            }
        }
        Algorithm::Knn => {
            let k = spec.usize_or("n_neighbors", 10)?;
            if k == 0 {
                return Err(Error::Config("n_neighbors must be at least 1".into()));
            }
            if k > x.len() {
                return Err(Error::Train(format!(
                    "n_neighbors {k} exceeds training size {}",
                    x.len()
                )));
            }
            let weights = match spec.str_or("weights", "distance", &["uniform", "distance"])? {
                ref s if s == "uniform" => KnnWeights::Uniform,
                _ => KnnWeights::Distance,
            };
            let p = spec.usize_or("p", 1)?;
            if !(1..=2).contains(&p) {
                return Err(Error::Config("p must be 1 or 2".into()));
            }
            spec.str_or("metric", "minkowski", &["minkowski"])?;
            spec.str_or(
                "algorithm",
                "brute",
                &["auto", "ball_tree", "kd_tree", "brute"],
            )?;
            spec.usize_or("leaf_size", 10)?;
            ModelParams::Knn(KnnModel {
                k,
                weights,
                p: p as u32,
                train_x: x.to_vec(),
                train_y: y_idx.clone(),
            })
        }
        Algorithm::Dt => {
            let tree_params = spec.tree_params(x.len())?;
            let weights = spec.class_weights(&class_counts)?;
            let sample_weight: Vec<f64> = y_idx.iter().map(|&c| weights[c]).collect();
            let indices: Vec<usize> = (0..x.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ModelParams::Dt(tree::grow_tree(
                x,
                &y_idx,
                &sample_weight,
                classes.len(),
                &indices,
                &tree_params,
                &mut rng,
            ))
        }
        Algorithm::Rf => {
            let tree_params = spec.tree_params(x.len())?;
            let n_estimators = spec.usize_or("n_estimators", 250)?;
            if n_estimators == 0 {
                return Err(Error::Config("n_estimators must be at least 1".into()));
            }
            let weights = spec.class_weights(&class_counts)?;
            let sample_weight: Vec<f64> = y_idx.iter().map(|&c| weights[c]).collect();
            ModelParams::Rf(forest::fit_forest(
                x,
                &y_idx,
                &sample_weight,
                classes.len(),
                n_estimators,
                &tree_params,
                seed,
            ))
        }
    };

    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        classes,
        n_features,
        params,
    })
}

/// One evaluation number plus a flag marking a zero-denominator case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

impl Metric {
    fn ratio(numerator: f64, denominator: f64) -> Self {
        if denominator == 0.0 {
            Metric {
                value: 0.0,
                undefined: true,
            }
        } else {
            Metric {
                value: numerator / denominator * 100.0,
                undefined: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
}

/// Per-class precision/recall/F1 (percent) for the two forecast classes,
/// plus wall times filled in by the training driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub drop: ClassMetrics,
    pub rise: ClassMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict_seconds: Option<f64>,
}

/// Precision/recall/F1 for one class, in percent.
pub fn class_metrics(
    predictions: &[Category],
    truth: &[Category],
    class: Category,
) -> ClassMetrics {
    let mut tp = 0f64;
    let mut fp = 0f64;
    let mut fn_ = 0f64;
    for (p, t) in predictions.iter().zip(truth) {
        match (*p == class, *t == class) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            (false, false) => {}
        }
    }
    let precision = Metric::ratio(tp, tp + fp);
    let recall = Metric::ratio(tp, tp + fn_);
    let f1 = if precision.value + recall.value == 0.0 {
        Metric {
            value: 0.0,
            undefined: precision.undefined || recall.undefined,
        }
    } else {
        Metric {
            value: 2.0 * precision.value * recall.value / (precision.value + recall.value),
            undefined: false,
        }
    };
    ClassMetrics {
        precision,
        recall,
        f1,
    }
}

pub fn evaluate(predictions: &[Category], truth: &[Category]) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::Invalid(format!(
            "prediction/truth length mismatch ({} vs {})",
            predictions.len(),
            truth.len()
        )));
    }
    Ok(EvalReport {
        drop: class_metrics(predictions, truth, Category::ShortTermDrop),
        rise: class_metrics(predictions, truth, Category::ShortTermRise),
        fit_seconds: None,
        predict_seconds: None,
    })
}

/// Macro-averaged F1 over all three classes, as a fraction in [0, 1].
pub fn macro_f1(predictions: &[Category], truth: &[Category]) -> f64 {
    let total: f64 = Category::ALL
        .iter()
        .map(|&class| class_metrics(predictions, truth, class).f1.value / 100.0)
        .sum();
    total / Category::ALL.len() as f64
}

/// Stratified k-fold split: indices are shuffled per class with the seeded
/// RNG, then dealt so each fold's class counts differ from the exact
/// proportion by at most one sample. Returns the k test-fold index sets.
pub fn stratified_kfold(y: &[Category], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    let mut per_class: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for (i, label) in y.iter().enumerate() {
        per_class.entry(*label).or_default().push(i);
    }
    for (class, members) in &per_class {
        if members.len() < k {
            return Err(Error::Train(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (_, members) in per_class.iter_mut() {
        members.shuffle(&mut rng);
        let base = members.len() / k;
        let extra = members.len() % k;
        let mut cursor = 0;
        for (f, fold) in folds.iter_mut().enumerate() {
            let take = base + usize::from(f < extra);
            fold.extend_from_slice(&members[cursor..cursor + take]);
            cursor += take;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Exhaustive grid search scored by mean macro-F1 over stratified k-fold
/// cross-validation. Enumeration is an odometer over the grid axes in the
/// order given (last axis varies fastest); ties keep the earlier candidate.
pub fn grid_search(
    algorithm: Algorithm,
    grid: &[(String, Vec<HyperValue>)],
    x: &[Vec<f64>],
    y: &[Category],
    k: usize,
    seed: u64,
) -> Result<(ModelSpec, f64)> {
    if grid.is_empty() || grid.iter().any(|(_, values)| values.is_empty()) {
        return Err(Error::Config("grid must list at least one value per axis".into()));
    }
    let folds = stratified_kfold(y, k, seed)?;

    let mut best: Option<(ModelSpec, f64)> = None;
    let mut cursor = vec![0usize; grid.len()];
    loop {
        let mut spec = ModelSpec::new(algorithm);
        for ((name, values), &at) in grid.iter().zip(&cursor) {
            spec.hyperparameters
                .insert(name.clone(), values[at].clone());
        }
        let score = cross_validate(&spec, x, y, &folds, seed)?;
        let replace = match &best {
            None => true,
            Some((_, best_score)) => score > *best_score,
        };
        if replace {
            best = Some((spec, score));
        }

        // odometer increment, last axis fastest
        let mut axis = grid.len();
        loop {
            if axis == 0 {
                return Ok(best.unwrap());
            }
            axis -= 1;
            cursor[axis] += 1;
            if cursor[axis] < grid[axis].1.len() {
                break;
            }
            cursor[axis] = 0;
        }
    }
}

fn cross_validate(
    spec: &ModelSpec,
    x: &[Vec<f64>],
    y: &[Category],
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for fold in folds {
        let test: BTreeSet<usize> = fold.iter().copied().collect();
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        for i in 0..x.len() {
            if !test.contains(&i) {
                train_x.push(x[i].clone());
                train_y.push(y[i]);
            }
        }
        let model = train(spec, &train_x, &train_y, seed)?;
        let mut predictions = Vec::with_capacity(fold.len());
        let mut truth = Vec::with_capacity(fold.len());
        for &i in fold {
            predictions.push(model.predict(&x[i])?.0);
            truth.push(y[i]);
        }
        total += macro_f1(&predictions, &truth);
    }
    Ok(total / folds.len() as f64)
}

/// How a hybrid classification was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassificationSource {
    Lexicon,
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridOutcome {
    pub category: Category,
    pub source: ClassificationSource,
    /// Lexicon terms that decided a stage-1 classification; empty for ML.
    pub matched_terms: Vec<String>,
    /// Class scores from the model; absent for stage-1 classifications.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_scores: Option<Vec<f64>>,
}

/// Lexicon match first; the model only runs when the lexica abstain.
pub fn hybrid_classify(
    tokens: &[String],
    features: &[f64],
    lexicons: &CategoryLexicons,
    model: &dyn Classifier,
) -> Result<HybridOutcome> {
    if let Some((category, matched_terms)) = match_lexicon(tokens, lexicons) {
        return Ok(HybridOutcome {
            category,
            source: ClassificationSource::Lexicon,
            matched_terms,
            class_scores: None,
        });
    }
    let (category, scores) = model.predict(features)?;
    Ok(HybridOutcome {
        category,
        source: ClassificationSource::Ml,
        matched_terms: Vec::new(),
        class_scores: Some(scores),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn three_class_data() -> (Vec<Vec<f64>>, Vec<Category>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let j = f64::from(i) * 0.01;
            x.push(vec![1.0 + j, 0.0, 0.0]);
            y.push(Category::ShortTermDrop);
            x.push(vec![0.0, 1.0 + j, 0.0]);
            y.push(Category::ShortTermRise);
            x.push(vec![0.0, 0.0, 1.0 + j]);
            y.push(Category::Other);
        }
        (x, y)
    }

    #[test]
    fn unknown_hyperparameter_is_rejected() {
        let spec = ModelSpec::new(Algorithm::Mnb).with("gamma", HyperValue::Float(1.0));
        let (x, y) = three_class_data();
        let err = train(&spec, &x, &y, 1).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn single_class_training_is_degenerate() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![Category::Other, Category::Other];
        assert!(train(&ModelSpec::tuned(Algorithm::Mnb), &x, &y, 1).is_err());
    }

    #[test]
    fn nb_rejects_negative_features() {
        let x = vec![vec![1.0], vec![-2.0], vec![1.0]];
        let y = vec![Category::ShortTermDrop, Category::ShortTermRise, Category::Other];
        assert!(train(&ModelSpec::tuned(Algorithm::Mnb), &x, &y, 1).is_err());
    }

    #[test]
    fn dimension_mismatch_at_predict() {
        let (x, y) = three_class_data();
        let model = train(&ModelSpec::tuned(Algorithm::Mnb), &x, &y, 1).unwrap();
        assert!(model.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn knn_probe_on_training_point() {
        let (x, y) = three_class_data();
        let spec = ModelSpec::new(Algorithm::Knn)
            .with("n_neighbors", HyperValue::Int(1))
            .with("weights", HyperValue::Text("uniform".into()));
        let model = train(&spec, &x, &y, 1).unwrap();
        let (category, _) = model.predict(&x[4]).unwrap();
        assert_eq!(category, y[4]);
    }

    #[test]
    fn nb_uniform_likelihoods_fall_back_to_priors() {
        // identical rows in every class: likelihoods carry no signal, so the
        // majority-prior class wins
        let x = vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]];
        let y = vec![
            Category::ShortTermDrop,
            Category::ShortTermRise,
            Category::ShortTermRise,
            Category::Other,
        ];
        let spec = ModelSpec::new(Algorithm::Mnb)
            .with("alpha", HyperValue::Float(1.0))
            .with("fit_prior", HyperValue::Bool(true));
        let model = train(&spec, &x, &y, 1).unwrap();
        let (category, _) = model.predict(&[1.0]).unwrap();
        assert_eq!(category, Category::ShortTermRise);
    }

    #[test]
    fn rf_same_seed_identical_predictions() {
        let (x, y) = three_class_data();
        let spec = ModelSpec::tuned(Algorithm::Rf).with("n_estimators", HyperValue::Int(20));
        let a = train(&spec, &x, &y, 7).unwrap();
        let b = train(&spec, &x, &y, 7).unwrap();
        assert_eq!(a, b);
        for row in &x {
            assert_eq!(a.predict(row).unwrap().0, b.predict(row).unwrap().0);
        }
    }

    #[test]
    fn dt_separable_training_accuracy() {
        let (x, y) = three_class_data();
        let spec = ModelSpec::new(Algorithm::Dt)
            .with("max_features", HyperValue::Null)
            .with("max_depth", HyperValue::Int(10));
        let model = train(&spec, &x, &y, 3).unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(model.predict(row).unwrap().0, *label);
        }
    }

    #[test]
    fn kfold_exact_proportions() {
        let mut y = Vec::new();
        y.extend(std::iter::repeat(Category::ShortTermDrop).take(50));
        y.extend(std::iter::repeat(Category::ShortTermRise).take(30));
        y.extend(std::iter::repeat(Category::Other).take(20));
        let folds = stratified_kfold(&y, 10, 11).unwrap();
        for fold in &folds {
            let drops = fold.iter().filter(|&&i| y[i] == Category::ShortTermDrop).count();
            let rises = fold.iter().filter(|&&i| y[i] == Category::ShortTermRise).count();
            let others = fold.iter().filter(|&&i| y[i] == Category::Other).count();
            assert_eq!((drops, rises, others), (5, 3, 2));
        }
    }

    #[test]
    fn kfold_partitions_indices() {
        let (_, y) = three_class_data();
        let folds = stratified_kfold(&y, 5, 3).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        let expected: Vec<usize> = (0..y.len()).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn kfold_seed_reproducible_and_small_class_rejected() {
        let (_, y) = three_class_data();
        assert_eq!(
            stratified_kfold(&y, 10, 5).unwrap(),
            stratified_kfold(&y, 10, 5).unwrap()
        );
        assert!(stratified_kfold(&y, 11, 5).is_err());
    }

    #[test]
    fn evaluate_perfect_predictions() {
        let truth = vec![
            Category::ShortTermDrop,
            Category::ShortTermRise,
            Category::Other,
        ];
        let report = evaluate(&truth, &truth).unwrap();
        assert_eq!(report.drop.f1.value, 100.0);
        assert_eq!(report.rise.f1.value, 100.0);
    }

    #[test]
    fn evaluate_all_other_has_zero_recall() {
        let truth = vec![
            Category::ShortTermDrop,
            Category::ShortTermRise,
            Category::Other,
        ];
        let preds = vec![Category::Other; 3];
        let report = evaluate(&preds, &truth).unwrap();
        assert_eq!(report.drop.recall.value, 0.0);
        assert_eq!(report.rise.recall.value, 0.0);
        assert!(report.drop.precision.undefined);
    }

    #[test]
    fn evaluate_hand_confusion() {
        // Drop: TP=9, FP=1, FN=3
        let mut preds = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..9 {
            preds.push(Category::ShortTermDrop);
            truth.push(Category::ShortTermDrop);
        }
        preds.push(Category::ShortTermDrop);
        truth.push(Category::Other);
        for _ in 0..3 {
            preds.push(Category::Other);
            truth.push(Category::ShortTermDrop);
        }
        let m = class_metrics(&preds, &truth, Category::ShortTermDrop);
        assert!((m.precision.value - 90.0).abs() < 1e-9);
        assert!((m.recall.value - 75.0).abs() < 1e-9);
        assert!((m.f1.value - 13500.0 / 165.0).abs() < 1e-9);
    }

    #[test]
    fn macro_metrics_invariant_under_relabeling() {
        let truth = vec![
            Category::ShortTermDrop,
            Category::ShortTermRise,
            Category::Other,
            Category::ShortTermDrop,
            Category::Other,
        ];
        let preds = vec![
            Category::ShortTermDrop,
            Category::Other,
            Category::Other,
            Category::ShortTermRise,
            Category::ShortTermDrop,
        ];
        let relabel = |c: Category| match c {
            Category::ShortTermDrop => Category::ShortTermRise,
            Category::ShortTermRise => Category::Other,
            Category::Other => Category::ShortTermDrop,
        };
        let preds2: Vec<Category> = preds.iter().map(|&c| relabel(c)).collect();
        let truth2: Vec<Category> = truth.iter().map(|&c| relabel(c)).collect();
        assert!((macro_f1(&preds, &truth) - macro_f1(&preds2, &truth2)).abs() < 1e-12);
    }

    #[test]
    fn grid_single_point_returned() {
        let (x, y) = three_class_data();
        let grid = vec![("alpha".to_string(), vec![HyperValue::Float(0.5)])];
        let (spec, _) = grid_search(Algorithm::Mnb, &grid, &x, &y, 5, 9).unwrap();
        assert_eq!(
            spec.hyperparameters.get("alpha"),
            Some(&HyperValue::Float(0.5))
        );
    }

    #[test]
    fn grid_tie_keeps_enumeration_order() {
        let (x, y) = three_class_data();
        // fit_prior makes no difference on this symmetric toy set, so both
        // candidates score identically and the first listed must win
        let grid = vec![(
            "fit_prior".to_string(),
            vec![HyperValue::Bool(false), HyperValue::Bool(true)],
        )];
        let (spec, _) = grid_search(Algorithm::Mnb, &grid, &x, &y, 5, 9).unwrap();
        assert_eq!(
            spec.hyperparameters.get("fit_prior"),
            Some(&HyperValue::Bool(false))
        );
    }

    #[test]
    fn grid_dominant_config_wins() {
        let (x, y) = three_class_data();
        // k=1 nails the separable toy set; k=24 with uniform weights sees the
        // whole training split and collapses into the tie-break class
        let grid = vec![
            ("n_neighbors".to_string(), vec![HyperValue::Int(24), HyperValue::Int(1)]),
            ("weights".to_string(), vec![HyperValue::Text("uniform".into())]),
        ];
        let (spec, score) = grid_search(Algorithm::Knn, &grid, &x, &y, 5, 9).unwrap();
        assert_eq!(
            spec.hyperparameters.get("n_neighbors"),
            Some(&HyperValue::Int(1))
        );
        assert!(score > 0.9, "{score}");
    }

    struct CountingModel<'a> {
        inner: &'a TrainedModel,
        calls: Cell<usize>,
    }

    impl Classifier for CountingModel<'_> {
        fn classes(&self) -> &[Category] {
            self.inner.classes()
        }
        fn predict(&self, x: &[f64]) -> Result<(Category, Vec<f64>)> {
            self.calls.set(self.calls.get() + 1);
            self.inner.predict(x)
        }
    }

    #[test]
    fn hybrid_lexicon_hit_never_calls_model() {
        use crate::lexicon::induce_lexicons;
        let corpus = vec![
            (vec!["bajista".to_string()], Category::ShortTermDrop),
            (vec!["alcista".to_string()], Category::ShortTermRise),
            (vec!["hola".to_string()], Category::Other),
        ];
        let lexicons = induce_lexicons(&corpus, 1.0).unwrap();
        let (x, y) = three_class_data();
        let model = train(&ModelSpec::tuned(Algorithm::Mnb), &x, &y, 1).unwrap();
        let counting = CountingModel {
            inner: &model,
            calls: Cell::new(0),
        };

        let hit = hybrid_classify(
            &["hoy".to_string(), "bajista".to_string()],
            &x[0],
            &lexicons,
            &counting,
        )
        .unwrap();
        assert_eq!(hit.category, Category::ShortTermDrop);
        assert_eq!(hit.source, ClassificationSource::Lexicon);
        assert_eq!(hit.matched_terms, vec!["bajista".to_string()]);
        assert_eq!(counting.calls.get(), 0);

        let miss = hybrid_classify(&["nada".to_string()], &x[0], &lexicons, &counting).unwrap();
        assert_eq!(miss.source, ClassificationSource::Ml);
        assert_eq!(counting.calls.get(), 1);
        assert!(miss.class_scores.is_some());
    }

    #[test]
    fn model_json_round_trip() {
        let (x, y) = three_class_data();
        let spec = ModelSpec::tuned(Algorithm::Rf).with("n_estimators", HyperValue::Int(5));
        let model = train(&spec, &x, &y, 42).unwrap();
        let json = model.to_json().unwrap();
        let reloaded = TrainedModel::from_json(&json).unwrap();
        assert_eq!(model, reloaded);
    }
}
