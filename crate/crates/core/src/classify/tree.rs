//! CART-style decision trees over dense feature rows.
//!
//! Splits minimize the weighted child impurity (gini or entropy). Candidate
//! features are drawn per node from a seeded RNG when `max_features` caps the
//! search, thresholds are midpoints between consecutive distinct values
//! (`best` splitter) or a uniform random cut (`random` splitter), and samples
//! route left when `x[feature] <= threshold`.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2() as usize,
        };
        m.clamp(1, n_features)
    }
}

/// Node-size constraints, either absolute sample counts or fractions of the
/// training-set size (resolved once at fit time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleCount {
    Absolute(usize),
    Fraction(f64),
}

impl SampleCount {
    pub fn resolve(self, n_samples: usize, floor: usize) -> usize {
        let resolved = match self {
            SampleCount::Absolute(n) => n,
            SampleCount::Fraction(f) => (f * n_samples as f64).ceil() as usize,
        };
        resolved.max(floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_features: MaxFeatures,
    pub max_depth: usize,
    pub min_samples_split: SampleCount,
    pub min_samples_leaf: SampleCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Weighted class counts observed at the leaf.
        class_weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    /// Weighted class counts at the leaf the sample lands in.
    pub fn leaf_weights(&self, x: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { class_weights } => return class_weights,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Predicted class index: argmax of leaf weights, lowest index on ties.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        argmax(self.leaf_weights(x))
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn impurity(criterion: Criterion, class_weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => {
            let sum_sq: f64 = class_weights
                .iter()
                .map(|w| {
                    let p = w / total;
                    p * p
                })
                .sum();
            1.0 - sum_sq
        }
        Criterion::Entropy => class_weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| {
                let p = w / total;
                -p * p.log2()
            })
            .sum(),
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    sample_weight: &'a [f64],
    n_classes: usize,
    n_features: usize,
    min_split: usize,
    min_leaf: usize,
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    child_impurity_sum: f64,
}

impl<'a> Builder<'a> {
    fn class_totals(&self, indices: &[usize]) -> (Vec<f64>, f64) {
        let mut weights = vec![0.0; self.n_classes];
        for &i in indices {
            weights[self.y[i]] += self.sample_weight[i];
        }
        let total = weights.iter().sum();
        (weights, total)
    }

    fn leaf(&mut self, class_weights: Vec<f64>) -> u32 {
        self.nodes.push(TreeNode::Leaf { class_weights });
        (self.nodes.len() - 1) as u32
    }

    fn grow(&mut self, indices: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let (class_weights, total) = self.class_totals(indices);
        let pure = class_weights.iter().filter(|w| **w > 0.0).count() <= 1;
        if depth >= self.params.max_depth || indices.len() < self.min_split || pure {
            return self.leaf(class_weights);
        }

        let parent_impurity_sum = impurity(self.params.criterion, &class_weights, total) * total;
        let m = self.params.max_features.resolve(self.n_features);
        let candidates: Vec<usize> = index_sample(rng, self.n_features, m).into_vec();

        let mut best: Option<BestSplit> = None;
        for &feature in &candidates {
            let split = match self.params.splitter {
                Splitter::Best => self.best_threshold(indices, feature),
                Splitter::Random => self.random_threshold(indices, feature, rng),
            };
            if let Some(split) = split {
                let better = match &best {
                    None => true,
                    Some(b) => split.child_impurity_sum < b.child_impurity_sum - 1e-12,
                };
                if better {
                    best = Some(split);
                }
            }
        }

        let Some(split) = best else {
            return self.leaf(class_weights);
        };
        if split.child_impurity_sum >= parent_impurity_sum - 1e-12 {
            return self.leaf(class_weights);
        }

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);

        // placeholder patched after children are grown
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let node_id = self.nodes.len() - 1;
        let left = self.grow(&left_idx, depth + 1, rng);
        let right = self.grow(&right_idx, depth + 1, rng);
        if let TreeNode::Split {
            left: l, right: r, ..
        } = &mut self.nodes[node_id]
        {
            *l = left;
            *r = right;
        }
        node_id as u32
    }

    /// Scan midpoints between consecutive distinct values; keep the cut with
    /// the lowest weighted child impurity that respects `min_samples_leaf`.
    fn best_threshold(&self, indices: &[usize], feature: usize) -> Option<BestSplit> {
        let mut ordered: Vec<usize> = indices.to_vec();
        ordered.sort_by(|&a, &b| {
            self.x[a][feature]
                .total_cmp(&self.x[b][feature])
                .then(a.cmp(&b))
        });

        let total_n = ordered.len();
        let (mut right_weights, total_weight) = self.class_totals(&ordered);
        let mut left_weights = vec![0.0; self.n_classes];
        let mut left_weight_total = 0.0;

        let mut best: Option<BestSplit> = None;
        for (pos, &i) in ordered.iter().enumerate().take(total_n - 1) {
            let w = self.sample_weight[i];
            left_weights[self.y[i]] += w;
            left_weight_total += w;
            right_weights[self.y[i]] -= w;

            let value = self.x[i][feature];
            let next = self.x[ordered[pos + 1]][feature];
            if next <= value {
                continue; // not a boundary between distinct values
            }
            let left_n = pos + 1;
            let right_n = total_n - left_n;
            if left_n < self.min_leaf || right_n < self.min_leaf {
                continue;
            }
            let threshold = value + (next - value) / 2.0;
            let child_sum = impurity(self.params.criterion, &left_weights, left_weight_total)
                * left_weight_total
                + impurity(
                    self.params.criterion,
                    &right_weights,
                    total_weight - left_weight_total,
                ) * (total_weight - left_weight_total);
            let better = match &best {
                None => true,
                Some(b) => child_sum < b.child_impurity_sum - 1e-12,
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    child_impurity_sum: child_sum,
                });
            }
        }
        best
    }

    /// Draw one uniform threshold between the feature's min and max.
    fn random_threshold(
        &self,
        indices: &[usize],
        feature: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<BestSplit> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in indices {
            lo = lo.min(self.x[i][feature]);
            hi = hi.max(self.x[i][feature]);
        }
        if !(hi > lo) {
            return None;
        }
        let threshold = rng.gen_range(lo..hi);
        let mut left_weights = vec![0.0; self.n_classes];
        let mut right_weights = vec![0.0; self.n_classes];
        let mut left_n = 0usize;
        for &i in indices {
            if self.x[i][feature] <= threshold {
                left_weights[self.y[i]] += self.sample_weight[i];
                left_n += 1;
            } else {
                right_weights[self.y[i]] += self.sample_weight[i];
            }
        }
        let right_n = indices.len() - left_n;
        if left_n < self.min_leaf || right_n < self.min_leaf {
            return None;
        }
        let lw: f64 = left_weights.iter().sum();
        let rw: f64 = right_weights.iter().sum();
        let child_sum = impurity(self.params.criterion, &left_weights, lw) * lw
            + impurity(self.params.criterion, &right_weights, rw) * rw;
        Some(BestSplit {
            feature,
            threshold,
            child_impurity_sum: child_sum,
        })
    }
}

/// Grow one tree over `indices` (duplicates allowed, e.g. bootstrap draws).
/// `sample_weight` is indexed like `x`; pass uniform weights when no class
/// weighting applies.
pub fn grow_tree(
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: &[f64],
    n_classes: usize,
    indices: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeModel {
    let n_features = x.first().map(Vec::len).unwrap_or(0);
    let mut builder = Builder {
        x,
        y,
        sample_weight,
        n_classes,
        n_features,
        min_split: params.min_samples_split.resolve(indices.len(), 2),
        min_leaf: params.min_samples_leaf.resolve(indices.len(), 1),
        params,
        nodes: Vec::new(),
    };
    builder.grow(indices, 0, rng);
    TreeModel {
        nodes: builder.nodes,
    }
}
