#![allow(dead_code)]

use std::path::PathBuf;

use cfshap::{Node, Tree, TreeEnsemble};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cfshap").chain(args.iter().copied());
    let code = cfshap_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Values on a coarse grid, so splits and data regularly tie.
pub fn grid_value<R: Rng>(rng: &mut R) -> f64 {
    f64::from(rng.gen_range(-8i32..=8)) * 0.25
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

fn grow<R: Rng>(
    rng: &mut R,
    nodes: &mut Vec<Node>,
    m: usize,
    depth: usize,
    split: &mut dyn FnMut(&mut R, usize) -> f64,
    full: bool,
) -> usize {
    let id = nodes.len();
    if depth == 0 || (!full && rng.gen_bool(0.2)) {
        nodes.push(Node::leaf(rng.gen_range(-1.0..1.0)));
        return id;
    }
    nodes.push(Node::leaf(0.0));
    let feature = rng.gen_range(0..m);
    let threshold = split(rng, feature);
    let left = grow(rng, nodes, m, depth - 1, split, full);
    let right = grow(rng, nodes, m, depth - 1, split, full);
    nodes[id] = Node::split(feature, threshold, left, right);
    id
}

/// Random trees of depth at most `max_depth` with grid thresholds.
pub fn random_ensemble<R: Rng>(
    rng: &mut R,
    m: usize,
    n_trees: usize,
    max_depth: usize,
) -> TreeEnsemble {
    let trees = (0..n_trees)
        .map(|_| {
            let mut nodes = Vec::new();
            grow(
                rng,
                &mut nodes,
                m,
                max_depth,
                &mut |r: &mut R, _| grid_value(r),
                false,
            );
            Tree::new(nodes, m).unwrap()
        })
        .collect();
    TreeEnsemble::new(trees, rng.gen_range(-0.5..0.5), m, 0.0).unwrap()
}

/// Full-depth trees whose thresholds are drawn from `columns[feature]`,
/// with small leaf values as in a boosted model.
pub fn data_driven_ensemble<R: Rng>(
    rng: &mut R,
    columns: &[Vec<f64>],
    n_trees: usize,
    depth: usize,
) -> TreeEnsemble {
    let m = columns.len();
    let trees = (0..n_trees)
        .map(|_| {
            let mut nodes = Vec::new();
            grow(
                rng,
                &mut nodes,
                m,
                depth,
                &mut |r: &mut R, f| columns[f][r.gen_range(0..columns[f].len())],
                true,
            );
            let nodes = nodes
                .into_iter()
                .map(|n| {
                    if n.is_leaf() {
                        Node::leaf(n.value() * 0.1)
                    } else {
                        n
                    }
                })
                .collect();
            Tree::new(nodes, m).unwrap()
        })
        .collect();
    TreeEnsemble::new(trees, 0.0, m, 0.0).unwrap()
}

/// The same ensemble with features `a` and `b` exchanged in every split.
pub fn swap_features(e: &TreeEnsemble, a: usize, b: usize) -> TreeEnsemble {
    let trees = e
        .trees()
        .iter()
        .map(|t| {
            let nodes = t
                .nodes()
                .iter()
                .map(|n| {
                    if n.is_leaf() {
                        *n
                    } else {
                        let f = n.feature();
                        let f = if f == a {
                            b
                        } else if f == b {
                            a
                        } else {
                            f
                        };
                        Node::split(f, n.threshold(), n.left(), n.right())
                    }
                })
                .collect();
            Tree::new(nodes, e.n_features()).unwrap()
        })
        .collect();
    TreeEnsemble::new(trees, e.base_score(), e.n_features(), e.threshold()).unwrap()
}
