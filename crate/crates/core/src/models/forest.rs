//! CART classification trees (Gini) and a bootstrap random forest.

use serde::{Deserialize, Serialize};

use crate::tensor::SeededRng;
use crate::{Error, Result};

use super::logistic::check_two_classes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌊√F⌋ (at least 1).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 6,
            min_leaf: 5,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class probabilities `[p0, p1]`.
    Leaf { probs: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

pub fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    y: &'a [f64],
    cfg: &'a ForestConfig,
    n_features: usize,
    n_root: f64,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i] == 1.0).count() as f64;
        let p1 = pos / idx.len() as f64;
        self.nodes.push(TreeNode::Leaf { probs: [1.0 - p1, p1] });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, child impurity) over `features`; ties keep
    /// the lowest feature index, then the lowest threshold.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len() as f64;
        let total_pos = idx.iter().filter(|&&i| self.y[i] == 1.0).count() as f64;
        let min_leaf = self.cfg.min_leaf.max(1);
        let mut best: Option<(usize, f64, f64)> = None;
        for &f in features {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0.0;
            for k in 0..order.len() - 1 {
                left_pos += self.y[order[k]];
                let (lo, hi) = (self.xs[order[k]][f], self.xs[order[k + 1]][f]);
                if lo == hi {
                    continue;
                }
                let n_left = (k + 1) as f64;
                let n_right = n - n_left;
                if (k + 1) < min_leaf || order.len() - (k + 1) < min_leaf {
                    continue;
                }
                let impurity = (n_left * gini(left_pos, n_left) + n_right * gini(total_pos - left_pos, n_right)) / n;
                let threshold = lo + (hi - lo) / 2.0;
                if best.is_none_or(|(_, _, b)| impurity < b) {
                    best = Some((f, threshold, impurity));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut SeededRng) -> usize {
        let n = idx.len() as f64;
        let pos = idx.iter().filter(|&&i| self.y[i] == 1.0).count() as f64;
        let parent = gini(pos, n);
        if parent == 0.0 || depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let k = self
            .cfg
            .max_features
            .unwrap_or_else(|| ((self.n_features as f64).sqrt().floor() as usize).max(1))
            .clamp(1, self.n_features);
        let features = if k == self.n_features {
            (0..self.n_features).collect()
        } else {
            rng.sample_indices(self.n_features, k)
        };
        let Some((feature, threshold, impurity)) = self.best_split(idx, &features) else {
            return self.leaf(idx);
        };
        if impurity >= parent {
            return self.leaf(idx);
        }
        self.importance[feature] += n / self.n_root * (parent - impurity);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.xs[i][feature] <= threshold);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { probs: [0.0, 0.0] });
        let left = self.grow(&l, depth + 1, rng);
        let right = self.grow(&r, depth + 1, rng);
        self.nodes[me] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

impl DecisionTree {
    /// Grows a tree on `idx` (row indices into `xs`, may repeat). Returns
    /// the tree and its unnormalised impurity-decrease importances.
    pub fn fit(xs: &[Vec<f64>], y: &[f64], idx: &[usize], cfg: &ForestConfig, rng: &mut SeededRng) -> (Self, Vec<f64>) {
        let n_features = xs[0].len();
        let mut b = Builder {
            xs,
            y,
            cfg,
            n_features,
            n_root: idx.len() as f64,
            nodes: Vec::new(),
            importance: vec![0.0; n_features],
        };
        b.grow(idx, 0, rng);
        (DecisionTree { nodes: b.nodes }, b.importance)
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { probs } => return probs[1],
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Rows of `[is_leaf, feature, threshold, left, right, p1]`.
    pub fn to_rows(&self) -> Vec<[f64; 6]> {
        self.nodes
            .iter()
            .map(|n| match *n {
                TreeNode::Leaf { probs } => [1.0, 0.0, 0.0, 0.0, 0.0, probs[1]],
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => [0.0, feature as f64, threshold, left as f64, right as f64, 0.0],
            })
            .collect()
    }

    pub fn from_rows(rows: &[[f64; 6]], n_features: usize) -> Result<Self> {
        let n = rows.len();
        let nodes = rows
            .iter()
            .map(|r| {
                if r[0] == 1.0 {
                    if !(0.0..=1.0).contains(&r[5]) {
                        return Err(Error::Format("tree leaf probability outside [0, 1]".into()));
                    }
                    Ok(TreeNode::Leaf { probs: [1.0 - r[5], r[5]] })
                } else {
                    let (feature, left, right) = (r[1] as usize, r[3] as usize, r[4] as usize);
                    if feature >= n_features || left >= n || right >= n {
                        return Err(Error::Format("tree split references an invalid index".into()));
                    }
                    Ok(TreeNode::Split {
                        feature,
                        threshold: r[2],
                        left,
                        right,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if nodes.is_empty() {
            return Err(Error::Format("empty tree".into()));
        }
        Ok(DecisionTree { nodes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    /// Mean impurity decrease per feature, normalised to sum to 1.
    pub importance: Vec<f64>,
}

/// Trees use independent RNG streams derived from `(seed, tree index)`.
pub fn forest_fit(xs: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, seed: u64) -> Result<RandomForest> {
    if xs.is_empty() || xs[0].is_empty() {
        return Err(Error::Data("forest training data is empty".into()));
    }
    if xs.len() != y.len() {
        return Err(Error::Shape {
            op: "forest_fit",
            left: (xs.len(), 1),
            right: (y.len(), 1),
        });
    }
    check_two_classes(y)?;
    if cfg.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let n_features = xs[0].len();
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut importance = vec![0.0; n_features];
    for t in 0..cfg.n_trees {
        let mut rng = SeededRng::derive(seed, t as u64);
        let idx: Vec<usize> = if cfg.bootstrap {
            (0..xs.len()).map(|_| rng.index(xs.len())).collect()
        } else {
            (0..xs.len()).collect()
        };
        let (tree, imp) = DecisionTree::fit(xs, y, &idx, cfg, &mut rng);
        for (a, b) in importance.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(tree);
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        importance.iter_mut().for_each(|v| *v /= total);
    }
    Ok(RandomForest {
        trees,
        n_features,
        importance,
    })
}

impl RandomForest {
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|x| {
                if x.len() != self.n_features {
                    return Err(Error::Shape {
                        op: "forest_predict",
                        left: (1, x.len()),
                        right: (1, self.n_features),
                    });
                }
                Ok(self.trees.iter().map(|t| t.predict_one(x)).sum::<f64>() / self.trees.len() as f64)
            })
            .collect()
    }
}
