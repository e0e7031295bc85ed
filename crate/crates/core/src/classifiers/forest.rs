//! Random forest of Gini-split binary decision trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree_count: usize,
    pub max_depth: usize,
    /// Features considered per split; `None` means `⌈√d⌉`.
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: 100,
            max_depth: 12,
            features_per_split: None,
            min_samples_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        prob: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; the root is index 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { prob } => return *prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub feature_count: usize,
    pub params: ForestParams,
    /// Set when no split was possible anywhere (every tree is a single
    /// majority-class leaf).
    pub degenerate: bool,
}

impl ForestModel {
    /// Mean of the leaf probabilities reached in each tree.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                actual: x.len(),
            });
        }
        if self.trees.is_empty() {
            return Ok(0.5);
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok((sum / self.trees.len() as f64).clamp(0.0, 1.0))
    }
}

/// Per-tree seed derived from the master seed, so trees can be grown in
/// any order without changing the result.
fn tree_seed(master: u64, tree: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ (tree as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: &'a ForestParams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    split_made: bool,
}

impl Grower<'_> {
    fn leaf(&mut self, samples: &[usize]) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i] == 1).count();
        let prob = pos as f64 / samples.len().max(1) as f64;
        self.nodes.push(Node::Leaf { prob });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, weighted child impurity) among at least
    /// `mtry` non-constant candidate features, continuing past constant
    /// ones until one valid split has been seen or features run out.
    fn best_split(&mut self, samples: &[usize]) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);

        let total = samples.len() as f64;
        let total_pos = samples.iter().filter(|&&i| self.y[i] == 1).count() as f64;
        let parent = gini(total_pos, total);

        let mut best: Option<(usize, f64, f64)> = None;
        let mut examined = 0;
        let mut column: Vec<(f64, u8)> = Vec::with_capacity(samples.len());
        for feature in order {
            if examined >= self.mtry && best.is_some() {
                break;
            }
            column.clear();
            column.extend(samples.iter().map(|&i| (self.x[i][feature], self.y[i])));
            let first = column[0].0;
            if column.iter().all(|(v, _)| *v == first) {
                continue;
            }
            examined += 1;
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_n = 0.0;
            let mut left_pos = 0.0;
            for w in 0..column.len() - 1 {
                left_n += 1.0;
                left_pos += f64::from(column[w].1);
                if column[w].0 == column[w + 1].0 {
                    continue;
                }
                let right_n = total - left_n;
                let right_pos = total_pos - left_pos;
                let impurity =
                    (left_n * gini(left_pos, left_n) + right_n * gini(right_pos, right_n)) / total;
                if best.is_none_or(|(_, _, b)| impurity < b) {
                    let threshold = 0.5 * (column[w].0 + column[w + 1].0);
                    best = Some((feature, threshold, impurity));
                }
            }
        }
        match best {
            Some((f, t, impurity)) if impurity < parent - 1e-12 => Some((f, t)),
            _ => None,
        }
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i] == 1).count();
        let pure = pos == 0 || pos == samples.len();
        if pure || depth >= self.params.max_depth || samples.len() < self.params.min_samples_split {
            return self.leaf(&samples);
        }
        let Some((feature, threshold)) = self.best_split(&samples) else {
            return self.leaf(&samples);
        };
        self.split_made = true;
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { prob: 0.0 });
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Grows `tree_count` trees, each on a bootstrap sample (when enabled) with
/// per-split feature subsampling.
pub fn train_forest(x: &[Vec<f64>], y: &[u8], params: &ForestParams) -> Result<ForestModel> {
    if x.is_empty() {
        return Err(Error::Data("cannot train a forest on zero examples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|row| row.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if params.tree_count == 0 {
        return Err(Error::Config("tree_count must be at least 1".into()));
    }
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d.max(1));

    let mut trees = Vec::with_capacity(params.tree_count);
    let mut any_split = false;
    for t in 0..params.tree_count {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(params.seed, t));
        let samples: Vec<usize> = if params.bootstrap {
            (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
        } else {
            (0..x.len()).collect()
        };
        let mut grower = Grower {
            x,
            y,
            params,
            mtry,
            rng,
            nodes: Vec::new(),
            split_made: false,
        };
        if d == 0 {
            grower.leaf(&samples);
        } else {
            grower.grow(samples, 0);
        }
        any_split |= grower.split_made;
        trees.push(Tree { nodes: grower.nodes });
    }
    Ok(ForestModel {
        trees,
        feature_count: d,
        params: params.clone(),
        degenerate: !any_split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_predicts_certainty() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y = vec![1u8; 20];
        let model = train_forest(&x, &y, &ForestParams { tree_count: 5, ..Default::default() }).unwrap();
        for row in &x {
            assert_eq!(model.predict_proba(row).unwrap(), 1.0);
        }
    }

    #[test]
    fn constant_features_give_majority_leaves() {
        let x = vec![vec![1.0, 2.0]; 10];
        let y = vec![1, 1, 1, 0, 0, 0, 0, 1, 1, 1];
        let params = ForestParams {
            tree_count: 3,
            bootstrap: false,
            ..Default::default()
        };
        let model = train_forest(&x, &y, &params).unwrap();
        assert!(model.degenerate);
        assert!((model.predict_proba(&[1.0, 2.0]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn averaging_and_dimension_check() {
        let leaf = |p| Tree {
            nodes: vec![Node::Leaf { prob: p }],
        };
        let mut model = ForestModel {
            trees: vec![leaf(0.7)],
            feature_count: 1,
            params: ForestParams::default(),
            degenerate: false,
        };
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), 0.7);
        model.trees = vec![leaf(0.2), leaf(0.8)];
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), 0.5);
        assert!(matches!(
            model.predict_proba(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn depth_is_bounded() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![(i * 7919 % 200) as f64]).collect();
        let y: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let params = ForestParams {
            tree_count: 2,
            max_depth: 4,
            ..Default::default()
        };
        let model = train_forest(&x, &y, &params).unwrap();
        assert!(model.trees.iter().all(|t| t.depth() <= 4));
    }
}
