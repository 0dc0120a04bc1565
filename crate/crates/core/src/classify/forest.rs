//! Random forest: fully grown CART trees with Gini impurity on bootstrap
//! resamples, deterministic given the config seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

use super::{validate_training_set, DecisionModel, TrainConfig};

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Probability of the positive class at this leaf.
        p_pos: f64,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf_probability(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { p_pos } => return *p_pos,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// +1 vote for positive, 0 for negative, 0.5 on a tied leaf.
    fn vote(&self, x: &[f64]) -> f64 {
        let p = self.leaf_probability(x);
        if p > 0.5 {
            1.0
        } else if p < 0.5 {
            0.0
        } else {
            0.5
        }
    }
}

/// A trained bagged ensemble of CART trees.
#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    dim: usize,
    mtry: usize,
    oob_error: Option<f64>,
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    /// Out-of-bag misclassification rate measured during training, if any
    /// sample was left out of at least one bootstrap.
    pub fn oob_error(&self) -> Option<f64> {
        self.oob_error
    }
}

impl DecisionModel for Forest {
    /// Fraction of trees voting the positive class.
    fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                got: x.len(),
                expected: self.dim,
            });
        }
        let votes: f64 = self.trees.iter().map(|t| t.vote(x)).sum();
        Ok(votes / self.trees.len() as f64)
    }
}

fn gini(n_neg: f64, n_pos: f64) -> f64 {
    let n = n_neg + n_pos;
    if n == 0.0 {
        return 0.0;
    }
    let p = n_pos / n;
    2.0 * p * (1.0 - p)
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, samples: Vec<usize>) -> usize {
        let n_pos = samples.iter().filter(|&&i| self.y[i] > 0.0).count();
        let n_neg = samples.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return self.push_leaf(n_neg, n_pos);
        }
        let dim = self.x[0].len();
        let mut features: Vec<usize> = (0..dim).collect();
        features.partial_shuffle(&mut self.rng, self.mtry);
        features.truncate(self.mtry);

        let parent_impurity = gini(n_neg as f64, n_pos as f64);
        let total = samples.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        for &feature in &features {
            let mut pairs: Vec<(f64, bool)> = samples
                .iter()
                .map(|&i| (self.x[i][feature], self.y[i] > 0.0))
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left_pos = 0.0;
            let mut left_neg = 0.0;
            for w in 0..pairs.len() - 1 {
                if pairs[w].1 {
                    left_pos += 1.0;
                } else {
                    left_neg += 1.0;
                }
                if pairs[w].0 == pairs[w + 1].0 {
                    continue;
                }
                let left_n = left_pos + left_neg;
                let right_pos = n_pos as f64 - left_pos;
                let right_neg = n_neg as f64 - left_neg;
                let right_n = right_pos + right_neg;
                let child = (left_n * gini(left_neg, left_pos)
                    + right_n * gini(right_neg, right_pos))
                    / total;
                let gain = parent_impurity - child;
                let threshold = 0.5 * (pairs[w].0 + pairs[w + 1].0);
                match best {
                    Some((g, _, _)) if gain <= g => {}
                    _ => best = Some((gain, feature, threshold)),
                }
            }
        }

        let Some((gain, feature, threshold)) = best else {
            return self.push_leaf(n_neg, n_pos);
        };
        if gain <= 0.0 {
            return self.push_leaf(n_neg, n_pos);
        }

        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { p_pos: 0.0 }); // placeholder
        let left = self.build(left_samples);
        let right = self.build(right_samples);
        self.nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }

    fn push_leaf(&mut self, n_neg: usize, n_pos: usize) -> usize {
        let p_pos = n_pos as f64 / (n_neg + n_pos) as f64;
        self.nodes.push(Node::Leaf { p_pos });
        self.nodes.len() - 1
    }
}

/// Train `cfg.n_trees` fully grown CART trees on bootstrap resamples with
/// mtry = ceil(sqrt(k)) candidate features per split. Per-tree RNG streams
/// are derived from (seed, tree index), so the result is independent of
/// build order.
pub fn train_rf(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Forest> {
    validate_training_set(x, y)?;
    if cfg.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be > 0".into()));
    }
    let m = x.len();
    let dim = x[0].len();
    let mtry = (dim as f64).sqrt().ceil() as usize;

    let mut trees = Vec::with_capacity(cfg.n_trees);
    // votes[i] accumulates out-of-bag votes for sample i.
    let mut oob_votes = vec![(0.0f64, 0usize); m];
    for tree_idx in 0..cfg.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[tree_idx as u64]));
        let mut in_bag = vec![false; m];
        let samples: Vec<usize> = (0..m)
            .map(|_| {
                let i = rng.random_range(0..m);
                in_bag[i] = true;
                i
            })
            .collect();
        let mut builder = TreeBuilder {
            x,
            y,
            mtry,
            rng,
            nodes: Vec::new(),
        };
        builder.build(samples);
        let tree = Tree {
            nodes: builder.nodes,
        };
        for i in 0..m {
            if !in_bag[i] {
                oob_votes[i].0 += tree.vote(&x[i]);
                oob_votes[i].1 += 1;
            }
        }
        trees.push(tree);
    }

    let mut errors = 0usize;
    let mut counted = 0usize;
    for (i, &(votes, n)) in oob_votes.iter().enumerate() {
        if n == 0 {
            continue;
        }
        counted += 1;
        let predicted_positive = votes / n as f64 > 0.5;
        if predicted_positive != (y[i] > 0.0) {
            errors += 1;
        }
    }
    let oob_error = (counted > 0).then(|| errors as f64 / counted as f64);

    Ok(Forest {
        trees,
        dim,
        mtry,
        oob_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cfg(n_trees: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            n_trees,
            seed,
            ..TrainConfig::default()
        }
    }

    fn perfectly_split_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let pos = i >= 15;
            // Feature 0 perfectly separates; features 1-2 are noise.
            let f0 = if pos { 1.0 + rng.random::<f64>() } else { -1.0 - rng.random::<f64>() };
            x.push(vec![f0, rng.random::<f64>(), rng.random::<f64>()]);
            y.push(if pos { 1.0 } else { -1.0 });
        }
        (x, y)
    }

    #[test]
    fn perfect_feature_gives_near_zero_oob_error() {
        let (x, y) = perfectly_split_data();
        let forest = train_rf(&x, &y, &cfg(200, 3)).unwrap();
        let oob = forest.oob_error().unwrap();
        assert!(oob < 0.05, "oob error = {oob}");
    }

    #[test]
    fn same_seed_same_predictions() {
        let (x, y) = perfectly_split_data();
        let a = train_rf(&x, &y, &cfg(50, 9)).unwrap();
        let b = train_rf(&x, &y, &cfg(50, 9)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..20 {
            let probe: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert_eq!(
                a.decision_score(&probe).unwrap(),
                b.decision_score(&probe).unwrap()
            );
        }
    }

    #[test]
    fn single_class_is_error() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1.0, 1.0, 1.0];
        assert!(train_rf(&x, &y, &cfg(10, 0)).is_err());
    }

    #[test]
    fn unanimous_forest_scores_one() {
        // One feature, fully separated classes: every split uses it and
        // every tree votes positive deep in the positive region.
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 10 { -1.0 - i as f64 } else { 1.0 + i as f64 }])
            .collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 } else { 1.0 }).collect();
        let forest = train_rf(&x, &y, &cfg(100, 7)).unwrap();
        assert_eq!(forest.decision_score(&[50.0]).unwrap(), 1.0);
        assert_eq!(forest.decision_score(&[-50.0]).unwrap(), 0.0);
    }

    #[test]
    fn mtry_is_ceil_sqrt() {
        let (x, y) = perfectly_split_data();
        let forest = train_rf(&x, &y, &cfg(5, 0)).unwrap();
        assert_eq!(forest.mtry(), 2); // ceil(sqrt(3))
    }
}
