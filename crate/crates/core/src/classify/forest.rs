//! Random forest: seeded bootstrap ensembles of CART trees with
//! majority-vote prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{argmax, grow_tree, TreeModel, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub n_classes: usize,
}

/// Per-tree seeds derive from the root seed so retraining with the same seed
/// reproduces every bootstrap draw and split.
fn tree_seed(root_seed: u64, tree_index: usize) -> u64 {
    root_seed.wrapping_add((tree_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: &[f64],
    n_classes: usize,
    n_estimators: usize,
    params: &TreeParams,
    root_seed: u64,
) -> ForestModel {
    let n = x.len();
    let trees = (0..n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(root_seed, t));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow_tree(x, y, sample_weight, n_classes, &bootstrap, params, &mut rng)
        })
        .collect();
    ForestModel { trees, n_classes }
}

impl ForestModel {
    /// Class index voted by each tree, in tree order.
    pub fn tree_predictions(&self, x: &[f64]) -> Vec<usize> {
        self.trees.iter().map(|t| t.predict_index(x)).collect()
    }

    /// Vote fractions per class.
    pub fn class_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for class in self.tree_predictions(x) {
            votes[class] += 1.0;
        }
        let total = self.trees.len() as f64;
        for v in &mut votes {
            *v /= total;
        }
        votes
    }

    /// Majority vote; ties resolve to the lowest class index.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        argmax(&self.class_scores(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tree::{Criterion, MaxFeatures, SampleCount, Splitter};

    fn params() -> TreeParams {
        TreeParams {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_features: MaxFeatures::Sqrt,
            max_depth: 8,
            min_samples_split: SampleCount::Absolute(2),
            min_samples_leaf: SampleCount::Absolute(1),
        }
    }

    fn blob_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            let jitter = f64::from(i) * 0.01;
            x.push(vec![0.0 + jitter, 0.5 - jitter, 0.1]);
            y.push(0);
            x.push(vec![3.0 - jitter, 3.5 + jitter, 2.9]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn prediction_equals_tree_vote_mode() {
        let (x, y) = blob_data();
        let w = vec![1.0; x.len()];
        let forest = fit_forest(&x, &y, &w, 2, 15, &params(), 99);
        for row in &x {
            let votes = forest.tree_predictions(row);
            let mut counts = [0usize; 2];
            for v in votes {
                counts[v] += 1;
            }
            let mode = if counts[1] > counts[0] { 1 } else { 0 };
            assert_eq!(forest.predict_index(row), mode);
        }
    }

    #[test]
    fn same_seed_reproduces_forest() {
        let (x, y) = blob_data();
        let w = vec![1.0; x.len()];
        let a = fit_forest(&x, &y, &w, 2, 9, &params(), 2024);
        let b = fit_forest(&x, &y, &w, 2, 9, &params(), 2024);
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_usually_differ() {
        let (x, y) = blob_data();
        let w = vec![1.0; x.len()];
        let a = fit_forest(&x, &y, &w, 2, 9, &params(), 1);
        let b = fit_forest(&x, &y, &w, 2, 9, &params(), 2);
        assert_ne!(a, b);
    }
}
