//! Counterfactual SHAP explanations: Shapley values against a background
//! plus a per-feature trend.
//!
//! For the counterfactual backgrounds the trend is derived from the same
//! background (sign of background mean minus query). The input-invariant
//! baselines carry no such information and get the global Pearson trend.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::background::{
    background_dlab, background_train, seeded_sample, BackgroundKind, BackgroundSpec,
    BoundaryProjector, CounterfactualPool,
};
use crate::dataset::{pearson_global_trends, Dataset, Trend};
use crate::error::{Error, Result};
use crate::model::TreeEnsemble;
use crate::quantile::QuantileTransform;
use crate::shap::{pairwise_sum, shapley_interventional_tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendSource {
    Derived,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackgroundInfo {
    pub kind: BackgroundKind,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub phi: Vec<f64>,
    pub tau: Vec<Trend>,
    pub phi0: f64,
    pub background: BackgroundInfo,
    pub trend: TrendSource,
}

impl Explanation {
    pub fn background_points_used(&self) -> usize {
        self.background.n
    }

    /// Trend pointing from a query of class `query_class` toward the other
    /// class. Derived trends already do; the global trend points toward
    /// label 1 and is negated for class-1 queries.
    pub fn action_trend(&self, query_class: u8) -> Vec<Trend> {
        match (self.trend, query_class) {
            (TrendSource::Global, 1) => self.tau.iter().map(|t| -t).collect(),
            _ => self.tau.clone(),
        }
    }
}

/// Sign of (background mean - query) per feature; an exact tie gives 0.
pub fn derived_trends(x: &[f64], background: &[Vec<f64>]) -> Result<Vec<Trend>> {
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    let n = background.len() as f64;
    let mut column = Vec::with_capacity(background.len());
    x.iter()
        .enumerate()
        .map(|(j, &xj)| {
            column.clear();
            for b in background {
                if b.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x.len(),
                        found: b.len(),
                    });
                }
                column.push(b[j]);
            }
            let diff = pairwise_sum(&column) / n - xj;
            Ok(if diff > 0.0 {
                1
            } else if diff < 0.0 {
                -1
            } else {
                0
            })
        })
        .collect()
}

/// Shared state for explaining many queries against one model and training
/// set: cached training predictions, global trends and neighbour pools.
pub struct Explainer<'a> {
    ensemble: &'a TreeEnsemble,
    train: &'a Dataset,
    qt: &'a QuantileTransform,
    /// Training rows per predicted class.
    rows_by_class: [Vec<usize>; 2],
    global_trends: Option<Vec<Trend>>,
    pools: Mutex<HashMap<(usize, u64), Arc<CounterfactualPool>>>,
}

impl<'a> Explainer<'a> {
    pub fn new(
        ensemble: &'a TreeEnsemble,
        train: &'a Dataset,
        qt: &'a QuantileTransform,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if train.n_features() != ensemble.n_features() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.n_features(),
                found: train.n_features(),
            });
        }
        let mut rows_by_class = [Vec::new(), Vec::new()];
        for (i, row) in train.rows().enumerate() {
            rows_by_class[ensemble.class_of(row) as usize].push(i);
        }
        let global_trends = match train.labels() {
            Some(_) if train.n_rows() >= 2 => Some(pearson_global_trends(train)?),
            _ => None,
        };
        Ok(Self {
            ensemble,
            train,
            qt,
            rows_by_class,
            global_trends,
            pools: Mutex::new(HashMap::new()),
        })
    }

    pub fn ensemble(&self) -> &TreeEnsemble {
        self.ensemble
    }

    pub fn train(&self) -> &Dataset {
        self.train
    }

    pub fn quantiles(&self) -> &QuantileTransform {
        self.qt
    }

    pub fn global_trends(&self) -> Option<&[Trend]> {
        self.global_trends.as_deref()
    }

    /// The neighbour pool for `(pool_cap, seed)`, built on first use and
    /// shared by every query afterwards.
    pub fn pool(&self, pool_cap: usize, seed: u64) -> Result<Arc<CounterfactualPool>> {
        let mut pools = self.pools.lock().expect("pool cache poisoned");
        if let Some(pool) = pools.get(&(pool_cap, seed)) {
            return Ok(pool.clone());
        }
        let pool = Arc::new(CounterfactualPool::new(
            self.train,
            self.qt,
            self.ensemble,
            pool_cap,
            seed,
        )?);
        pools.insert((pool_cap, seed), pool.clone());
        Ok(pool)
    }

    fn sample(&self, eligible: &[usize], spec: &BackgroundSpec) -> Vec<Vec<f64>> {
        seeded_sample(eligible.len(), spec.sample_n, spec.seed)
            .into_iter()
            .map(|i| self.train.row(eligible[i]).to_vec())
            .collect()
    }

    /// Builds the background `spec` describes for query `x`.
    pub fn background(&self, x: &[f64], spec: &BackgroundSpec) -> Result<Vec<Vec<f64>>> {
        spec.validate()?;
        let class = self.ensemble.decide(x)?;
        match spec.kind {
            BackgroundKind::Train => background_train(self.train, spec),
            BackgroundKind::DLab => background_dlab(self.train, spec),
            BackgroundKind::DPred => {
                let eligible = &self.rows_by_class[1 - class as usize];
                if eligible.is_empty() {
                    return Err(Error::NoRowsInClass { class: 1 - class });
                }
                Ok(self.sample(eligible, spec))
            }
            BackgroundKind::Knn | BackgroundKind::KnnProjected => {
                let pool = self.pool(spec.pool_cap, spec.seed)?;
                let q = self.qt.to_quantile(x)?;
                let nearest = pool.nearest_counterfactuals(&q, class, spec.k);
                if nearest.is_empty() {
                    return Err(Error::NoCounterfactualPool { query_class: class });
                }
                let points = nearest.into_iter().map(|(p, _)| pool.point(p).to_vec());
                if spec.kind == BackgroundKind::Knn {
                    Ok(points.collect())
                } else {
                    let projector = BoundaryProjector::new(self.ensemble);
                    points.map(|p| projector.project(x, &p)).collect()
                }
            }
        }
    }

    pub fn explain(&self, x: &[f64], spec: &BackgroundSpec) -> Result<Explanation> {
        let background = self.background(x, spec)?;
        let attribution = shapley_interventional_tree(self.ensemble, x, &background)?;
        let (tau, trend) = if spec.kind.is_counterfactual() {
            (derived_trends(x, &background)?, TrendSource::Derived)
        } else {
            let global = self.global_trends.clone().ok_or(Error::MissingLabels)?;
            (global, TrendSource::Global)
        };
        Ok(Explanation {
            phi: attribution.phi,
            tau,
            phi0: attribution.expected_background_output,
            background: BackgroundInfo {
                kind: spec.kind,
                n: background.len(),
            },
            trend,
        })
    }
}
