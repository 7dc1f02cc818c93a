//! Multinomial and complement naive Bayes over non-negative count features.

use serde::{Deserialize, Serialize};

/// Multinomial naive Bayes with additive smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub alpha: f64,
    pub fit_prior: bool,
    pub class_log_prior: Vec<f64>,
    /// `[class][feature]` smoothed log likelihoods.
    pub feature_log_prob: Vec<Vec<f64>>,
}

impl MultinomialNb {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_features: usize,
        alpha: f64,
        fit_prior: bool,
    ) -> Self {
        let mut class_count = vec![0f64; n_classes];
        let mut feature_count = vec![vec![0f64; n_features]; n_classes];
        for (row, &class) in x.iter().zip(y) {
            class_count[class] += 1.0;
            for (acc, v) in feature_count[class].iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = x.len() as f64;
        let class_log_prior = if fit_prior {
            class_count.iter().map(|c| (c / n).ln()).collect()
        } else {
            vec![-(n_classes as f64).ln(); n_classes]
        };
        let feature_log_prob = feature_count
            .iter()
            .map(|counts| {
                let total: f64 = counts.iter().sum::<f64>() + alpha * n_features as f64;
                counts.iter().map(|c| ((c + alpha) / total).ln()).collect()
            })
            .collect();
        MultinomialNb {
            alpha,
            fit_prior,
            class_log_prior,
            feature_log_prob,
        }
    }

    /// Unnormalized log joint likelihood per class. Zero-count features are
    /// skipped so an unseen feature (log-likelihood −∞ at α = 0) cannot
    /// produce 0·−∞.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        self.class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(prior, log_prob)| {
                let mut score = *prior;
                for (v, lp) in x.iter().zip(log_prob) {
                    if *v != 0.0 {
                        score += v * lp;
                    }
                }
                score
            })
            .collect()
    }
}

/// Complement naive Bayes: per-class weights come from the counts of every
/// *other* class. Class priors are not part of the multiclass decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementNb {
    pub alpha: f64,
    pub fit_prior: bool,
    pub norm: bool,
    pub class_log_prior: Vec<f64>,
    /// `[class][feature]` complement weights.
    pub feature_weights: Vec<Vec<f64>>,
}

impl ComplementNb {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_features: usize,
        alpha: f64,
        fit_prior: bool,
        norm: bool,
    ) -> Self {
        let mut class_count = vec![0f64; n_classes];
        let mut feature_count = vec![vec![0f64; n_features]; n_classes];
        let mut feature_all = vec![0f64; n_features];
        for (row, &class) in x.iter().zip(y) {
            class_count[class] += 1.0;
            for (f, v) in row.iter().enumerate() {
                feature_count[class][f] += v;
                feature_all[f] += v;
            }
        }
        let n = x.len() as f64;
        let class_log_prior = if fit_prior {
            class_count.iter().map(|c| (c / n).ln()).collect()
        } else {
            vec![-(n_classes as f64).ln(); n_classes]
        };

        let feature_weights = (0..n_classes)
            .map(|class| {
                let comp: Vec<f64> = (0..n_features)
                    .map(|f| feature_all[f] + alpha - feature_count[class][f])
                    .collect();
                let total: f64 = comp.iter().sum();
                let logged: Vec<f64> = comp.iter().map(|c| (c / total).ln()).collect();
                if norm {
                    let sum: f64 = logged.iter().sum();
                    logged.iter().map(|l| l / sum).collect()
                } else {
                    logged.iter().map(|l| -l).collect()
                }
            })
            .collect();

        ComplementNb {
            alpha,
            fit_prior,
            norm,
            class_log_prior,
            feature_weights,
        }
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        self.feature_weights
            .iter()
            .map(|weights| {
                x.iter()
                    .zip(weights)
                    .filter(|(v, _)| **v != 0.0)
                    .map(|(v, w)| v * w)
                    .sum()
            })
            .collect()
    }
}

/// Softmax over log scores, stable under large magnitudes.
pub fn log_scores_to_probabilities(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
