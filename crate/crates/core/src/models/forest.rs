//! Random forest of CART trees: bootstrap sampling, random feature subsets,
//! and Gini-minimizing splits on midpoint thresholds. Per-tree RNG streams are
//! pre-derived from the fit seed, so tree order never changes results.

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_input, ModelError};

/// Size of the random feature subset examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    /// Number of features to examine for a dataset with `d` features.
    pub fn count(&self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Log2 => ((d as f64).log2().floor() as usize).max(1),
            MaxFeatures::All => d,
        }
        .min(d)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
            MaxFeatures::All => "all",
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" => Ok(MaxFeatures::All),
            other => Err(ModelError::InvalidParam(format!(
                "max_features must be sqrt, log2 or all, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl RandomForestParams {
    pub fn new(
        n_estimators: usize,
        max_depth: usize,
        min_samples_split: usize,
        max_features: MaxFeatures,
    ) -> Result<Self, ModelError> {
        if n_estimators < 1 {
            return Err(ModelError::InvalidParam("n_estimators must be >= 1".into()));
        }
        if max_depth < 1 {
            return Err(ModelError::InvalidParam("max_depth must be >= 1".into()));
        }
        if min_samples_split < 2 {
            return Err(ModelError::InvalidParam(
                "min_samples_split must be >= 2".into(),
            ));
        }
        Ok(RandomForestParams {
            n_estimators,
            max_depth,
            min_samples_split,
            max_features,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        dist: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn leaf_dist<'a>(&'a self, row: &[f64]) -> &'a [f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { dist } => return dist,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    #[cfg(test)]
    fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1 && matches!(self.nodes[0], TreeNode::Leaf { .. })
    }
}

/// A fitted forest; prediction averages per-tree leaf class distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_features: usize,
    n_classes: usize,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let t = self.trees.len() as f64;
        x.iter()
            .map(|row| {
                let mut acc = vec![0.0; self.n_classes];
                for tree in &self.trees {
                    for (a, &p) in acc.iter_mut().zip(tree.leaf_dist(row)) {
                        *a += p;
                    }
                }
                for a in &mut acc {
                    *a /= t;
                }
                acc
            })
            .collect()
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: &'a RandomForestParams,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in samples {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn leaf(&mut self, counts: &[usize]) -> usize {
        let total: usize = counts.iter().sum();
        let dist = counts.iter().map(|&c| c as f64 / total as f64).collect();
        self.nodes.push(TreeNode::Leaf { dist });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold) over the random subset, by weighted child
    /// Gini; ties keep the lowest feature index, then the lowest threshold.
    fn best_split(
        &self,
        samples: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let m = self.params.max_features.count(d);
        let mut features = rand::seq::index::sample(rng, d, m).into_vec();
        features.sort_unstable();

        let total_n = samples.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
        for &feature in &features {
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (self.x[i][feature], self.y[i])));
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = self.class_counts(samples);
            let mut left_n = 0usize;
            let mut i = 0;
            while i < pairs.len() {
                // Move one group of equal values to the left side.
                let v = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == v {
                    left_counts[pairs[i].1] += 1;
                    right_counts[pairs[i].1] -= 1;
                    left_n += 1;
                    i += 1;
                }
                if i == pairs.len() {
                    break; // no group to the right
                }
                let next = pairs[i].0;
                let threshold = 0.5 * (v + next);
                // Midpoints can collapse onto v for adjacent floats; such a
                // threshold would send the left group right, so skip it.
                if !(threshold > v && threshold <= next) {
                    continue;
                }
                let right_n = pairs.len() - left_n;
                let score = (left_n as f64 * gini_f64(&left_counts, left_n)
                    + right_n as f64 * gini_f64(&right_counts, right_n))
                    / total_n;
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.class_counts(&samples);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || samples.len() < self.params.min_samples_split
        {
            return self.leaf(&counts);
        }
        let Some((feature, threshold)) = self.best_split(&samples, rng) else {
            return self.leaf(&counts);
        };
        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x[i][feature] < threshold);

        // Reserve our slot before recursing so child indices are stable.
        let node_idx = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { dist: Vec::new() });
        let left = self.grow(left_samples, depth + 1, rng);
        let right = self.grow(right_samples, depth + 1, rng);
        self.nodes[node_idx] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        node_idx
    }
}

fn gini_f64(counts: &[usize], total: usize) -> f64 {
    let total = total as f64;
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

/// Train `n_estimators` CART trees on bootstrap samples. Tree `t` uses RNG
/// stream `t` of `seed`, so serial and (potential) parallel training agree.
pub fn fit_random_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &RandomForestParams,
    seed: u64,
) -> Result<ForestModel, ModelError> {
    check_training_input(x, y, n_classes)?;
    let n = x.len();
    let mut trees = Vec::with_capacity(params.n_estimators);
    for t in 0..params.n_estimators {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let samples: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut builder = TreeBuilder {
            x,
            y,
            n_classes,
            params,
            nodes: Vec::new(),
        };
        let root = builder.grow(samples, 0, &mut rng);
        debug_assert_eq!(root, 0);
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }
    Ok(ForestModel {
        trees,
        n_features: x[0].len(),
        n_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TrainedModel;

    fn xor_points() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![0, 1, 1, 0];
        (x, y)
    }

    #[test]
    fn pure_samples_grow_a_single_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1, 1, 1, 0];
        let params = RandomForestParams::new(1, 5, 2, MaxFeatures::All).unwrap();
        let mut builder = TreeBuilder {
            x: &x,
            y: &y,
            n_classes: 2,
            params: &params,
            nodes: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // A pure subset: only samples labeled 1.
        builder.grow(vec![0, 1, 2], 0, &mut rng);
        let tree = Tree {
            nodes: builder.nodes,
        };
        assert!(tree.is_single_leaf());
        assert_eq!(tree.leaf_dist(&[0.5]), &[0.0, 1.0]);
    }

    /// Enumerate every depth-1 stump (all feature-aligned thresholds, all
    /// leaf-class assignments, plus constant predictors): the exhaustive
    /// oracle for the best achievable stump training accuracy.
    fn best_stump_accuracy(x: &[Vec<f64>], y: &[usize]) -> f64 {
        let score = |pred: &dyn Fn(&[f64]) -> usize| {
            x.iter().zip(y).filter(|(row, &label)| pred(row) == label).count() as f64
                / x.len() as f64
        };
        let mut best: f64 = score(&|_| 0).max(score(&|_| 1));
        for feature in 0..x[0].len() {
            let mut values: Vec<f64> = x.iter().map(|r| r[feature]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for pair in values.windows(2) {
                let threshold = 0.5 * (pair[0] + pair[1]);
                for left_class in 0..2usize {
                    for right_class in 0..2usize {
                        best = best.max(score(&|row: &[f64]| {
                            if row[feature] < threshold {
                                left_class
                            } else {
                                right_class
                            }
                        }));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn depth_one_stump_cannot_solve_xor() {
        let (x, y) = xor_points();
        // Any depth-1 split predicts a constant per side, so XOR caps at 0.5;
        // comfortably below the 0.75 bound asserted on the trained stump.
        let oracle_bound = best_stump_accuracy(&x, &y);
        assert_eq!(oracle_bound, 0.5);

        let params = RandomForestParams::new(1, 1, 2, MaxFeatures::All).unwrap();
        let model = fit_random_forest(&x, &y, 2, &params, 3).unwrap();
        let pred = TrainedModel::Forest(model).predict(&x).unwrap();
        let acc =
            pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / x.len() as f64;
        assert!(acc <= 0.75, "stump accuracy {acc} exceeded the depth-1 bound");
        assert!(acc <= oracle_bound, "stump accuracy {acc} beat the oracle");
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = xor_points();
        let params = RandomForestParams::new(7, 4, 2, MaxFeatures::Sqrt).unwrap();
        let a = fit_random_forest(&x, &y, 2, &params, 42).unwrap();
        let b = fit_random_forest(&x, &y, 2, &params, 42).unwrap();
        assert_eq!(a, b);
        let c = fit_random_forest(&x, &y, 2, &params, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn proba_is_exact_mean_of_leaf_votes() {
        // Two single-leaf trees voting [1,0] and [0,1].
        let forest = ForestModel {
            trees: vec![
                Tree {
                    nodes: vec![TreeNode::Leaf {
                        dist: vec![1.0, 0.0],
                    }],
                },
                Tree {
                    nodes: vec![TreeNode::Leaf {
                        dist: vec![0.0, 1.0],
                    }],
                },
            ],
            n_features: 1,
            n_classes: 2,
        };
        let model = TrainedModel::Forest(forest);
        let proba = model.predict_proba(&[vec![0.0]]).unwrap();
        assert_eq!(proba[0], vec![0.5, 0.5]);
        // Tie broken toward the lowest class id.
        assert_eq!(model.predict(&[vec![0.0]]).unwrap(), vec![0]);
    }

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(30), 5);
        assert_eq!(MaxFeatures::Log2.count(30), 4);
        assert_eq!(MaxFeatures::All.count(30), 30);
        assert_eq!(MaxFeatures::Sqrt.count(1), 1);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
    }

    #[test]
    fn forest_separates_an_easy_problem() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let params = RandomForestParams::new(15, 6, 2, MaxFeatures::All).unwrap();
        let model = fit_random_forest(&x, &y, 2, &params, 0).unwrap();
        let pred = TrainedModel::Forest(model).predict(&x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / 40.0;
        assert!(acc >= 0.95, "easy split accuracy {acc}");
    }
}
