use super::{pairwise_sum, pairwise_sum_rows, Attribution, ShapleyWeights};
use crate::error::{Error, Result};
use crate::model::{Node, TreeEnsemble};

const UNOWNED: u8 = 0;
const QUERY: u8 = 1;
const BACKGROUND: u8 = 2;

/// Traversal state for one (tree, background point) pair.
struct Walk<'a> {
    nodes: &'a [Node],
    /// `query_left[i]`: the query goes left at node `i`.
    query_left: &'a [bool],
    reference: &'a [f64],
    weights: &'a ShapleyWeights,
    owner: &'a mut [u8],
    query_owned: &'a mut Vec<u32>,
    reference_owned: &'a mut Vec<u32>,
    phi: &'a mut [f64],
}

impl Walk<'_> {
    fn visit(&mut self, i: usize) {
        let node = self.nodes[i];
        if node.is_leaf() {
            let (a, b) = (self.query_owned.len(), self.reference_owned.len());
            if a + b == 0 {
                return;
            }
            let v = node.value();
            if a > 0 {
                let w = v * self.weights.query_side(a, b);
                for &f in self.query_owned.iter() {
                    self.phi[f as usize] += w;
                }
            }
            if b > 0 {
                let w = v * self.weights.background_side(a, b);
                for &f in self.reference_owned.iter() {
                    self.phi[f as usize] -= w;
                }
            }
            return;
        }
        let f = node.feature();
        let x_child = if self.query_left[i] {
            node.left()
        } else {
            node.right()
        };
        let r_child = node.child(self.reference[f]);
        if x_child == r_child {
            return self.visit(x_child);
        }
        match self.owner[f] {
            QUERY => self.visit(x_child),
            BACKGROUND => self.visit(r_child),
            _ => {
                self.owner[f] = QUERY;
                self.query_owned.push(f as u32);
                self.visit(x_child);
                self.query_owned.pop();

                self.owner[f] = BACKGROUND;
                self.reference_owned.push(f as u32);
                self.visit(r_child);
                self.reference_owned.pop();
                self.owner[f] = UNOWNED;
            }
        }
    }
}

/// Exact interventional Shapley values, one tree traversal per
/// (tree, background point) pair.
///
/// At every split the walk follows the query's branch, the background
/// point's branch, or both when they disagree and the feature has not been
/// assigned yet. A leaf reached with `a` query-assigned and `b`
/// background-assigned features pays out through [`ShapleyWeights`].
/// Contributions are summed over trees in order, then averaged over the
/// background with pairwise summation, so the result is bit-stable.
pub fn shapley_interventional_tree(
    e: &TreeEnsemble,
    x: &[f64],
    background: &[Vec<f64>],
) -> Result<Attribution> {
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    let m = e.n_features();
    if let Some(len) = std::iter::once(x.len())
        .chain(background.iter().map(Vec::len))
        .find(|&l| l != m)
    {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: len,
        });
    }

    let max_depth = e.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
    let weights = ShapleyWeights::new(max_depth.min(m).max(1));

    let mut offsets = Vec::with_capacity(e.trees().len());
    let mut query_left = Vec::new();
    for tree in e.trees() {
        offsets.push(query_left.len());
        query_left.extend(
            tree.nodes()
                .iter()
                .map(|n| !n.is_leaf() && x[n.feature()] < n.threshold()),
        );
    }

    let mut owner = vec![UNOWNED; m];
    let mut query_owned = Vec::with_capacity(weights.max_players());
    let mut reference_owned = Vec::with_capacity(weights.max_players());
    let per_point: Vec<Vec<f64>> = background
        .iter()
        .map(|reference| {
            let mut phi = vec![0.0; m];
            for (tree, &offset) in e.trees().iter().zip(&offsets) {
                let nodes = tree.nodes();
                Walk {
                    nodes,
                    query_left: &query_left[offset..offset + nodes.len()],
                    reference,
                    weights: &weights,
                    owner: &mut owner,
                    query_owned: &mut query_owned,
                    reference_owned: &mut reference_owned,
                    phi: &mut phi,
                }
                .visit(0);
            }
            phi
        })
        .collect();

    let n = background.len() as f64;
    let mut phi = pairwise_sum_rows(&per_point, m);
    phi.iter_mut().for_each(|p| *p /= n);
    let margins: Vec<f64> = background.iter().map(|b| e.margin(b)).collect();

    Ok(Attribution {
        phi,
        expected_background_output: pairwise_sum(&margins) / n,
        query: x.to_vec(),
        background_size: background.len(),
    })
}
