//! Counterfactual SHAP for tree ensembles.
//!
//! Shapley values computed against a background of counterfactual points
//! (training rows of the opposite predicted class near the query), together
//! with per-feature trends telling which way each feature should move. The
//! [`recourse`] module scores any attribution by how cheaply a user who
//! follows it reaches the other side of the decision boundary.

pub mod background;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod model;
pub mod quantile;
pub mod recourse;
pub mod shap;
pub mod timing;

pub use background::{BackgroundKind, BackgroundSpec, CounterfactualPool};
pub use dataset::{pearson_global_trends, Dataset, Trend};
pub use error::{Error, Result};
pub use explain::{derived_trends, Explainer, Explanation, TrendSource};
pub use model::{parse_model_json, to_native_json, Node, Tree, TreeEnsemble};
pub use quantile::QuantileTransform;
pub use recourse::{
    improvement, induced_counterfactual, run_benchmark, ActionKind, ActionSpec, BenchmarkConfig,
    BenchmarkReport, CostNorm, EvalRecord, Method,
};
pub use shap::{shapley_brute_force, shapley_interventional_tree, Attribution};
