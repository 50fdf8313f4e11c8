#![allow(dead_code)]

use cfshap::{Dataset, Node, Tree, TreeEnsemble};
use rand::Rng;

/// Thresholds come from a coarse grid so that query and background values
/// regularly land exactly on a split.
pub fn grid_value<R: Rng>(rng: &mut R) -> f64 {
    f64::from(rng.gen_range(-8i32..=8)) * 0.25
}

fn grow<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, m: usize, depth: usize) -> usize {
    let id = nodes.len();
    if depth == 0 || rng.gen_bool(0.2) {
        nodes.push(Node::leaf(rng.gen_range(-1.0..1.0)));
        return id;
    }
    nodes.push(Node::leaf(0.0));
    let feature = rng.gen_range(0..m);
    let threshold = grid_value(rng);
    let left = grow(rng, nodes, m, depth - 1);
    let right = grow(rng, nodes, m, depth - 1);
    nodes[id] = Node::split(feature, threshold, left, right);
    id
}

pub fn random_tree<R: Rng>(rng: &mut R, m: usize, max_depth: usize) -> Tree {
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, m, max_depth);
    Tree::new(nodes, m).unwrap()
}

pub fn random_ensemble<R: Rng>(
    rng: &mut R,
    m: usize,
    n_trees: usize,
    max_depth: usize,
) -> TreeEnsemble {
    let trees = (0..n_trees)
        .map(|_| random_tree(rng, m, max_depth))
        .collect();
    TreeEnsemble::new(trees, rng.gen_range(-0.5..0.5), m, 0.0).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| {
            if rng.gen_bool(0.3) {
                grid_value(rng)
            } else {
                rng.gen_range(-2.5..2.5)
            }
        })
        .collect()
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, m: usize) -> Dataset {
    let rows = (0..n).map(|_| random_point(rng, m)).collect();
    Dataset::from_rows(rows, None, None).unwrap()
}
