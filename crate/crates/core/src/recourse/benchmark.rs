use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    action_direction, induced_counterfactual, record_for, ActionKind, ActionSpec, CostNorm,
    DirectionConvention, EvalRecord, PlausibilityPool,
};
use crate::background::{seeded_sample, BackgroundSpec, DEFAULT_POOL_CAP, DEFAULT_SEED};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{Explainer, Explanation};
use crate::timing::{explanation_latency, DEFAULT_REPEATS};

/// Queries used for timing, at most.
const TIMING_QUERIES: usize = 100;
/// Offset separating the utility-vector stream from the sample selection.
const UTILITY_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub spec: BackgroundSpec,
}

impl Method {
    pub fn new(spec: BackgroundSpec) -> Self {
        Self {
            name: spec.display_name(),
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub k_values: Vec<usize>,
    pub actions: Vec<ActionKind>,
    pub costs: Vec<CostNorm>,
    pub n_samples: usize,
    pub seed: u64,
    pub convention: DirectionConvention,
    /// Pool used for plausibility, as `(pool_cap, seed)`.
    pub plausibility_pool: (usize, u64),
    pub timing: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            k_values: (1..=5).collect(),
            actions: vec![ActionKind::Proportional, ActionKind::Random],
            costs: vec![CostNorm::L1, CostNorm::L2],
            n_samples: 4000,
            seed: 0,
            convention: DirectionConvention::default(),
            plausibility_pool: (DEFAULT_POOL_CAP, DEFAULT_SEED),
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CfAbility,
    Plausibility,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub sample: usize,
    /// Row of the query in the test set.
    pub row: usize,
    pub method: String,
    pub k: usize,
    pub action: ActionKind,
    pub cost_norm: CostNorm,
    #[serde(flatten)]
    pub record: EvalRecord,
}

/// `"action/cost" -> "A vs B" -> k -> value`.
pub type ImprovementTable = BTreeMap<String, BTreeMap<String, BTreeMap<usize, f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub methods: Vec<String>,
    pub rejected_available: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub k_values: Vec<usize>,
    pub improvement: ImprovementTable,
    pub plausibility_improvement: ImprovementTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_us: Option<BTreeMap<String, f64>>,
    #[serde(skip)]
    pub records: Vec<BenchmarkRecord>,
}

impl BenchmarkReport {
    /// Scores of `method` for one grid cell, in sample order.
    pub fn scores(
        &self,
        method: &str,
        k: usize,
        action: ActionKind,
        cost: CostNorm,
        metric: Metric,
    ) -> Vec<f64> {
        report_scores(&self.records, method, k, action, cost, metric)
    }
}

pub(crate) fn grid_key(action: ActionKind, cost: CostNorm) -> String {
    format!("{}/{}", action.as_str(), cost.as_str())
}

fn pair_key(a: &str, b: &str) -> String {
    format!("{a} vs {b}")
}

/// Ordered `(reference, other)` method pairs: every counterfactual method
/// against every other method, or the first method against the rest when
/// no counterfactual method is present.
fn comparison_pairs(methods: &[Method]) -> Vec<(usize, usize)> {
    let mut refs: Vec<usize> = (0..methods.len())
        .filter(|&i| methods[i].spec.kind.is_counterfactual())
        .collect();
    if refs.is_empty() {
        refs.push(0);
    }
    refs.iter()
        .flat_map(|&a| {
            (0..methods.len())
                .filter(move |&b| b != a)
                .map(move |b| (a, b))
        })
        .collect()
}

fn validate(methods: &[Method], config: &BenchmarkConfig, m: usize) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::InvalidSpec("no methods to evaluate".into()));
    }
    for (i, method) in methods.iter().enumerate() {
        method.spec.validate()?;
        if methods[..i].iter().any(|o| o.name == method.name) {
            return Err(Error::InvalidSpec(format!(
                "duplicate method name '{}'",
                method.name
            )));
        }
    }
    if config.n_samples == 0 {
        return Err(Error::InvalidSpec("n_samples must be at least 1".into()));
    }
    if config.k_values.is_empty() || config.actions.is_empty() || config.costs.is_empty() {
        return Err(Error::InvalidSpec("empty evaluation grid".into()));
    }
    if let Some(&k) = config.k_values.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::InvalidSpec(format!("k = {k} outside 1..={m}")));
    }
    Ok(())
}

/// Evaluates every method on a seeded subsample of the rejected (class 1)
/// test rows over the `k x action x cost` grid.
///
/// Samples are processed in parallel; records are ordered by sample, then
/// method, k, action and cost, so the report depends only on the inputs.
pub fn run_benchmark(
    explainer: &Explainer<'_>,
    methods: &[Method],
    d_test: &Dataset,
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    let e = explainer.ensemble();
    let qt = explainer.quantiles();
    let m = e.n_features();
    validate(methods, config, m)?;
    if d_test.n_features() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: d_test.n_features(),
        });
    }

    let rejected: Vec<usize> = d_test
        .rows()
        .enumerate()
        .filter(|(_, x)| e.class_of(x) == 1)
        .map(|(i, _)| i)
        .collect();
    if rejected.is_empty() {
        return Err(Error::NoRejectedSamples);
    }
    let chosen: Vec<usize> = seeded_sample(rejected.len(), config.n_samples, config.seed)
        .into_iter()
        .map(|i| rejected[i])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(UTILITY_STREAM));
    let utilities: Vec<Vec<f64>> = chosen
        .iter()
        .map(|_| (0..m).map(|_| rng.sample(Open01)).collect())
        .collect();

    let (cap, pool_seed) = config.plausibility_pool;
    let pool = PlausibilityPool::from_counterfactual_pool(&*explainer.pool(cap, pool_seed)?);
    for method in methods {
        if method.spec.kind.is_counterfactual() {
            explainer.pool(method.spec.pool_cap, method.spec.seed)?;
        }
    }

    let per_sample: Vec<Vec<BenchmarkRecord>> = chosen
        .par_iter()
        .zip(utilities.par_iter())
        .enumerate()
        .map(|(sample, (&row, r))| {
            let x = d_test.row(row);
            let explanations = methods
                .iter()
                .map(|method| explainer.explain(x, &method.spec))
                .collect::<Result<Vec<Explanation>>>()?;
            let mut out = Vec::with_capacity(
                methods.len() * config.k_values.len() * config.actions.len() * config.costs.len(),
            );
            for (method, ex) in methods.iter().zip(&explanations) {
                let tau = ex.action_trend(1);
                for &k in &config.k_values {
                    for &action in &config.actions {
                        let spec = ActionSpec {
                            kind: action,
                            k,
                            random_vector: (action == ActionKind::Random).then(|| r.clone()),
                            convention: config.convention,
                        };
                        let induced = match action_direction(&ex.phi, &tau, &spec) {
                            Ok(dir) => induced_counterfactual(x, &dir, e, qt)?,
                            Err(Error::EmptyActionSubset) => None,
                            Err(err) => return Err(err),
                        };
                        for &cost_norm in &config.costs {
                            let record = match &induced {
                                Some(cf) => record_for(x, cf.clone(), cost_norm, qt, Some(&pool))?,
                                None => EvalRecord::none(x),
                            };
                            out.push(BenchmarkRecord {
                                sample,
                                row,
                                method: method.name.clone(),
                                k,
                                action,
                                cost_norm,
                                record,
                            });
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut report = BenchmarkReport {
        methods: methods.iter().map(|mm| mm.name.clone()).collect(),
        rejected_available: rejected.len(),
        n_samples: chosen.len(),
        seed: config.seed,
        k_values: config.k_values.clone(),
        improvement: BTreeMap::new(),
        plausibility_improvement: BTreeMap::new(),
        timing_us: None,
        records: per_sample.into_iter().flatten().collect(),
    };

    let pairs = comparison_pairs(methods);
    for &action in &config.actions {
        for &cost in &config.costs {
            let key = grid_key(action, cost);
            for (metric, table) in [
                (Metric::CfAbility, &mut report.improvement),
                (Metric::Plausibility, &mut report.plausibility_improvement),
            ] {
                let cell = table.entry(key.clone()).or_default();
                for &(a, b) in &pairs {
                    let series = cell
                        .entry(pair_key(&methods[a].name, &methods[b].name))
                        .or_default();
                    for &k in &config.k_values {
                        let sa = report_scores(
                            &report.records,
                            &methods[a].name,
                            k,
                            action,
                            cost,
                            metric,
                        );
                        let sb = report_scores(
                            &report.records,
                            &methods[b].name,
                            k,
                            action,
                            cost,
                            metric,
                        );
                        series.insert(k, super::improvement(&sa, &sb)?);
                    }
                }
            }
        }
    }

    if config.timing {
        let queries: Vec<Vec<f64>> = chosen
            .iter()
            .take(TIMING_QUERIES)
            .map(|&i| d_test.row(i).to_vec())
            .collect();
        let mut timing = BTreeMap::new();
        for method in methods {
            let t = explanation_latency(explainer, &method.spec, &queries, DEFAULT_REPEATS)?;
            timing.insert(method.name.clone(), t.as_secs_f64() * 1e6);
        }
        report.timing_us = Some(timing);
    }
    Ok(report)
}

fn report_scores(
    records: &[BenchmarkRecord],
    method: &str,
    k: usize,
    action: ActionKind,
    cost: CostNorm,
    metric: Metric,
) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.method == method && r.k == k && r.action == action && r.cost_norm == cost)
        .map(|r| match metric {
            Metric::CfAbility => r.record.cf_ability,
            Metric::Plausibility => r.record.plausibility_score(),
        })
        .collect()
}

/// Plot table for one `(action, cost)` panel: `k` on the rows, one column
/// per method pair, improvement in the cells.
pub fn plot_csv(
    report: &BenchmarkReport,
    action: ActionKind,
    cost: CostNorm,
    metric: Metric,
) -> String {
    let table = match metric {
        Metric::CfAbility => &report.improvement,
        Metric::Plausibility => &report.plausibility_improvement,
    };
    let empty = BTreeMap::new();
    let cell = table.get(&grid_key(action, cost)).unwrap_or(&empty);
    let mut out = String::from("k");
    for pair in cell.keys() {
        out.push(',');
        out.push_str(&csv_field(pair));
    }
    out.push('\n');
    for &k in &report.k_values {
        let _ = write!(out, "{k}");
        for series in cell.values() {
            match series.get(&k) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
