//! Additive ensembles of binary decision trees evaluated in margin space.
//!
//! Routing follows the XGBoost convention: a sample goes left iff
//! `x[feature] < threshold`.

mod json;
mod threshold;

pub use json::{parse_model_json, parse_xgboost_dump, to_native_json};
pub use threshold::{select_threshold_roc, ThresholdObjective, ThresholdSelection};

use crate::error::{Error, Result};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
}

impl Node {
    pub fn split(feature: usize, threshold: f64, left: usize, right: usize) -> Self {
        Self {
            feature: feature as u32,
            threshold,
            left: left as u32,
            right: right as u32,
        }
    }

    /// A leaf; the value is stored in the threshold slot.
    pub fn leaf(value: f64) -> Self {
        Self {
            feature: LEAF,
            threshold: value,
            left: LEAF,
            right: LEAF,
        }
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }

    #[inline]
    pub fn feature(&self) -> usize {
        self.feature as usize
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.left as usize
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.right as usize
    }

    /// Child taken by a sample with value `v` on this node's feature.
    #[inline]
    pub fn child(&self, v: f64) -> usize {
        if v < self.threshold {
            self.left as usize
        } else {
            self.right as usize
        }
    }
}

/// A single binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates that `nodes` forms one rooted binary tree over `n_features`.
    pub fn new(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        let invalid = |i: usize, msg: String| Error::Schema {
            path: format!("nodes[{i}]"),
            message: msg,
        };
        if nodes.is_empty() {
            return Err(Error::Schema {
                path: "nodes".into(),
                message: "tree has no nodes".into(),
            });
        }
        let mut parents = vec![0u32; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if node.is_leaf() {
                if !node.value().is_finite() {
                    return Err(invalid(i, "leaf value is not finite".into()));
                }
                continue;
            }
            if node.feature() >= n_features {
                return Err(invalid(
                    i,
                    format!(
                        "split feature {} out of range 0..{n_features}",
                        node.feature()
                    ),
                ));
            }
            if !node.threshold().is_finite() {
                return Err(invalid(i, "split threshold is not finite".into()));
            }
            for child in [node.left(), node.right()] {
                if child >= nodes.len() {
                    return Err(invalid(i, format!("child index {child} out of range")));
                }
                if child == 0 {
                    return Err(invalid(i, "root cannot be a child".into()));
                }
                parents[child] += 1;
            }
            if node.left() == node.right() {
                return Err(invalid(i, "both children are the same node".into()));
            }
        }
        // Exactly one parent for every non-root node, and every node reachable
        // from the root, together rule out cycles and forests.
        if let Some(i) = (1..nodes.len()).find(|&i| parents[i] != 1) {
            return Err(invalid(i, format!("node has {} parents", parents[i])));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(invalid(i, "cycle detected".into()));
            }
            if !nodes[i].is_leaf() {
                stack.push(nodes[i].left());
                stack.push(nodes[i].right());
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(invalid(i, "node unreachable from root".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return node.value();
            }
            i = node.child(x[node.feature()]);
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + go(t, n.left()).max(go(t, n.right()))
            }
        }
        go(self, 0)
    }
}

/// Additive tree ensemble: `f(x) = base_score + sum_trees leaf(x)`, with the
/// adverse class predicted when `f(x) > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<Tree>,
    base_score: f64,
    n_features: usize,
    threshold: f64,
}

impl TreeEnsemble {
    pub fn new(
        trees: Vec<Tree>,
        base_score: f64,
        n_features: usize,
        threshold: f64,
    ) -> Result<Self> {
        if !base_score.is_finite() {
            return Err(Error::Schema {
                path: "base_score".into(),
                message: "not finite".into(),
            });
        }
        if !threshold.is_finite() {
            return Err(Error::Schema {
                path: "threshold".into(),
                message: "not finite".into(),
            });
        }
        for (t, tree) in trees.iter().enumerate() {
            if let Some(i) = tree
                .nodes
                .iter()
                .position(|n| !n.is_leaf() && n.feature() >= n_features)
            {
                return Err(Error::Schema {
                    path: format!("trees[{t}][{i}].feat"),
                    message: format!("feature index out of range 0..{n_features}"),
                });
            }
        }
        Ok(Self {
            trees,
            base_score,
            n_features,
            threshold,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidSpec(
                "decision threshold must be finite".into(),
            ));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn with_base_score(mut self, base_score: f64) -> Result<Self> {
        if !base_score.is_finite() {
            return Err(Error::InvalidSpec("base score must be finite".into()));
        }
        self.base_score = base_score;
        Ok(self)
    }

    /// Widens the declared input dimension (e.g. when a dump never splits on
    /// the trailing features).
    pub fn with_n_features(mut self, n_features: usize) -> Result<Self> {
        let used = self.max_split_feature().map_or(0, |f| f + 1);
        if n_features < used {
            return Err(Error::DimensionMismatch {
                expected: used,
                found: n_features,
            });
        }
        self.n_features = n_features;
        Ok(self)
    }

    fn max_split_feature(&self) -> Option<usize> {
        self.trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter(|n| !n.is_leaf())
            .map(Node::feature)
            .max()
    }

    /// Concatenates the trees of two ensembles; base scores add up.
    pub fn concat(&self, other: &TreeEnsemble) -> Result<TreeEnsemble> {
        let mut trees = self.trees.clone();
        trees.extend(other.trees.iter().cloned());
        TreeEnsemble::new(
            trees,
            self.base_score + other.base_score,
            self.n_features.max(other.n_features),
            self.threshold,
        )
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_margin(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.margin(x))
    }

    pub fn decide(&self, x: &[f64]) -> Result<u8> {
        self.check(x)?;
        Ok(self.class_of(x))
    }

    /// Margin without the dimension check; `x` must have `n_features` entries.
    #[inline]
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.leaf_value(x)).sum::<f64>()
    }

    #[inline]
    pub fn class_of(&self, x: &[f64]) -> u8 {
        self.class_of_margin(self.margin(x))
    }

    #[inline]
    pub fn class_of_margin(&self, margin: f64) -> u8 {
        u8::from(margin > self.threshold)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
