//! k-nearest-neighbor classification with Minkowski distance.
//!
//! Neighbor search is brute force: the training matrices here are small
//! enough that tree indexes would not pay for themselves. The `algorithm`
//! and `leaf_size` hyperparameters are accepted for configuration parity and
//! recorded, but do not change the search.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub weights: KnnWeights,
    /// Minkowski exponent (1 = Manhattan, 2 = Euclidean).
    pub p: u32,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<usize>,
}

impl KnnModel {
    pub fn minkowski(&self, a: &[f64], b: &[f64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powi(self.p as i32))
            .sum();
        sum.powf(1.0 / f64::from(self.p))
    }

    /// Per-class weight totals over the k nearest neighbors, normalized to
    /// sum to one. Distance ties rank by training index, so results are
    /// deterministic. With distance weighting, a zero-distance neighbor
    /// dominates: those neighbors get weight 1 and all others 0.
    pub fn class_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut ranked: Vec<(f64, usize)> = self
            .train_x
            .iter()
            .enumerate()
            .map(|(i, row)| (self.minkowski(x, row), i))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked.truncate(self.k);

        let weights: Vec<f64> = match self.weights {
            KnnWeights::Uniform => vec![1.0; ranked.len()],
            KnnWeights::Distance => {
                if ranked.iter().any(|(d, _)| *d == 0.0) {
                    ranked
                        .iter()
                        .map(|(d, _)| if *d == 0.0 { 1.0 } else { 0.0 })
                        .collect()
                } else {
                    ranked.iter().map(|(d, _)| 1.0 / d).collect()
                }
            }
        };

        let mut scores = vec![0.0; n_classes];
        for ((_, idx), w) in ranked.iter().zip(&weights) {
            scores[self.train_y[*idx]] += w;
        }
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            for s in &mut scores {
                *s /= total;
            }
        }
        scores
    }
}
