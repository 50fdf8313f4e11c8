//! Interventional Shapley values of a tree ensemble's margin against an
//! explicit, uniformly weighted background set.
//!
//! The game is `v(S) = mean_{b in D} f(x_S, b_rest)`. Two routes compute it:
//! [`shapley_brute_force`] enumerates every coalition and is the reference,
//! [`shapley_interventional_tree`] walks each (tree, background point) pair
//! once and is what explanations use.

mod brute;
mod interventional;
mod weights;

pub use brute::{characteristic_value, shapley_brute_force, MAX_BRUTE_FORCE_FEATURES};
pub use interventional::shapley_interventional_tree;
pub use weights::ShapleyWeights;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribution {
    pub phi: Vec<f64>,
    /// Mean margin over the background, `v(empty set)`.
    #[serde(rename = "phi0")]
    pub expected_background_output: f64,
    #[serde(skip)]
    pub query: Vec<f64>,
    #[serde(skip)]
    pub background_size: usize,
}

impl Attribution {
    /// `phi0 + sum(phi)`, which equals the query margin.
    pub fn reconstructed_output(&self) -> f64 {
        self.expected_background_output + pairwise_sum(&self.phi)
    }
}

/// Pairwise (cascade) summation with a fixed split rule, so the result only
/// depends on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Column-wise pairwise sum of equally sized rows.
pub(crate) fn pairwise_sum_rows(rows: &[Vec<f64>], width: usize) -> Vec<f64> {
    match rows.len() {
        0 => vec![0.0; width],
        1 => rows[0].clone(),
        n => {
            let (a, b) = rows.split_at(n / 2);
            let mut left = pairwise_sum_rows(a, width);
            let right = pairwise_sum_rows(b, width);
            left.iter_mut().zip(&right).for_each(|(l, r)| *l += r);
            left
        }
    }
}
