//! Background datasets for the Shapley game.
//!
//! Three input-invariant baselines (a training sample, label-1 rows, rows of
//! the opposite predicted class) and two counterfactual backgrounds: the K
//! nearest opposite-class rows in quantile space, optionally projected onto
//! the decision boundary along the segment to the query.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::TreeEnsemble;
use crate::quantile::QuantileTransform;

pub const DEFAULT_SAMPLE_N: usize = 100;
pub const DEFAULT_K: usize = 100;
pub const DEFAULT_POOL_CAP: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    Train,
    DLab,
    DPred,
    Knn,
    KnnProjected,
}

impl BackgroundKind {
    pub fn is_counterfactual(self) -> bool {
        matches!(self, Self::Knn | Self::KnnProjected)
    }

    fn tag(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::DLab => "dlab",
            Self::DPred => "dpred",
            Self::Knn => "knn",
            Self::KnnProjected => "knn-proj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub kind: BackgroundKind,
    /// Rows sampled for the input-invariant kinds.
    pub sample_n: usize,
    /// Neighbours for the K-NN kinds.
    pub k: usize,
    pub seed: u64,
    /// Size of the random training subsample the neighbours come from.
    pub pool_cap: usize,
}

impl BackgroundSpec {
    pub fn new(kind: BackgroundKind) -> Self {
        Self {
            kind,
            sample_n: DEFAULT_SAMPLE_N,
            k: DEFAULT_K,
            seed: DEFAULT_SEED,
            pool_cap: DEFAULT_POOL_CAP,
        }
    }

    pub fn knn(k: usize) -> Self {
        Self {
            k,
            ..Self::new(BackgroundKind::Knn)
        }
    }

    pub fn knn_projected(k: usize) -> Self {
        Self {
            k,
            ..Self::new(BackgroundKind::KnnProjected)
        }
    }

    pub fn sampled(kind: BackgroundKind, n: usize) -> Self {
        Self {
            sample_n: n,
            ..Self::new(kind)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_n == 0 {
            return Err(Error::InvalidSpec("sample size must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        if self.pool_cap < self.k {
            return Err(Error::InvalidSpec(format!(
                "pool cap {} is smaller than K = {}",
                self.pool_cap, self.k
            )));
        }
        Ok(())
    }

    /// Display name in the style used by the reports, e.g. `CF-SHAP 100-NN`.
    pub fn display_name(&self) -> String {
        match self.kind {
            BackgroundKind::Train => "SHAP TRAIN".into(),
            BackgroundKind::DLab => "SHAP D-LAB".into(),
            BackgroundKind::DPred => "SHAP D-PRED".into(),
            BackgroundKind::Knn => format!("CF-SHAP {}-NN", self.k),
            BackgroundKind::KnnProjected => format!("CF-SHAP {}-NN*", self.k),
        }
    }
}

impl fmt::Display for BackgroundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BackgroundKind::Knn | BackgroundKind::KnnProjected => write!(
                f,
                "{}:K={},pool={},seed={}",
                self.kind.tag(),
                self.k,
                self.pool_cap,
                self.seed
            ),
            _ => write!(
                f,
                "{}:n={},seed={}",
                self.kind.tag(),
                self.sample_n,
                self.seed
            ),
        }
    }
}

/// Parses `kind[:key=value,...]`, e.g. `knn:K=100`, `train:n=100,seed=3`,
/// `knn-proj:K=50,pool=5000`.
impl FromStr for BackgroundSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "train" => BackgroundKind::Train,
            "dlab" | "d-lab" => BackgroundKind::DLab,
            "dpred" | "d-pred" => BackgroundKind::DPred,
            "knn" => BackgroundKind::Knn,
            "knn-proj" | "knn_proj" | "knn*" => BackgroundKind::KnnProjected,
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown background kind '{other}'"
                )))
            }
        };
        let mut spec = Self::new(kind);
        for param in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = param
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got '{param}'")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidSpec(format!("'{v}' is not a non-negative integer")))
            };
            match key.trim() {
                "K" | "k" => spec.k = parse(value)? as usize,
                "n" => spec.sample_n = parse(value)? as usize,
                "seed" => spec.seed = parse(value)?,
                "pool" | "pool_cap" => spec.pool_cap = parse(value)? as usize,
                other => return Err(Error::InvalidSpec(format!("unknown parameter '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Seeded sample of `amount` distinct indices out of `0..n`, ascending; all
/// of them when `amount >= n`.
pub fn seeded_sample(n: usize, amount: usize, seed: u64) -> Vec<usize> {
    if amount >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    idx.sort_unstable();
    idx
}

fn sample_rows(d: &Dataset, eligible: &[usize], spec: &BackgroundSpec) -> Vec<Vec<f64>> {
    seeded_sample(eligible.len(), spec.sample_n, spec.seed)
        .into_iter()
        .map(|i| d.row(eligible[i]).to_vec())
        .collect()
}

/// Seeded uniform sample of training rows.
pub fn background_train(d: &Dataset, spec: &BackgroundSpec) -> Result<Vec<Vec<f64>>> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let all: Vec<usize> = (0..d.n_rows()).collect();
    Ok(sample_rows(d, &all, spec))
}

/// Seeded sample of the rows labelled 1. Selection is by label only.
pub fn background_dlab(d: &Dataset, spec: &BackgroundSpec) -> Result<Vec<Vec<f64>>> {
    let labels = d.labels().ok_or(Error::MissingLabels)?;
    let eligible: Vec<usize> = (0..d.n_rows()).filter(|&i| labels[i] == 1).collect();
    if eligible.is_empty() {
        return Err(Error::NoRowsInClass { class: 1 });
    }
    Ok(sample_rows(d, &eligible, spec))
}

/// Seeded sample of the rows whose predicted class differs from
/// `query_class`.
pub fn background_dpred(
    d: &Dataset,
    e: &TreeEnsemble,
    query_class: u8,
    spec: &BackgroundSpec,
) -> Result<Vec<Vec<f64>>> {
    let mut eligible = Vec::new();
    for (i, row) in d.rows().enumerate() {
        if e.decide(row)? != query_class {
            eligible.push(i);
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoRowsInClass {
            class: 1 - query_class.min(1),
        });
    }
    Ok(sample_rows(d, &eligible, spec))
}

/// A seeded subsample of the training set with cached quantiles and
/// predicted classes. Neighbour searches and plausibility both run on it.
#[derive(Debug, Clone)]
pub struct CounterfactualPool {
    rows: Vec<usize>,
    points: Vec<f64>,
    quantiles: Vec<f64>,
    classes: Vec<u8>,
    n_features: usize,
}

impl CounterfactualPool {
    pub fn new(
        d: &Dataset,
        qt: &QuantileTransform,
        e: &TreeEnsemble,
        pool_cap: usize,
        seed: u64,
    ) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let m = d.n_features();
        if qt.n_features() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: qt.n_features(),
            });
        }
        let rows = seeded_sample(d.n_rows(), pool_cap, seed);
        let mut points = Vec::with_capacity(rows.len() * m);
        let mut quantiles = vec![0.0; rows.len() * m];
        let mut classes = Vec::with_capacity(rows.len());
        for (p, &i) in rows.iter().enumerate() {
            let row = d.row(i);
            points.extend_from_slice(row);
            qt.to_quantile_into(row, &mut quantiles[p * m..(p + 1) * m]);
            classes.push(e.decide(row)?);
        }
        Ok(Self {
            rows,
            points,
            quantiles,
            classes,
            n_features: m,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Training-set row index of pool entry `p`.
    pub fn row_index(&self, p: usize) -> usize {
        self.rows[p]
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p * self.n_features..(p + 1) * self.n_features]
    }

    pub fn quantiles(&self, p: usize) -> &[f64] {
        &self.quantiles[p * self.n_features..(p + 1) * self.n_features]
    }

    pub fn class(&self, p: usize) -> u8 {
        self.classes[p]
    }

    /// Pool entries predicted differently from `query_class`, nearest first
    /// by L1 distance in quantile space; ties go to the lower training row.
    /// Returns `(pool entry, distance)` pairs, at most `k` of them.
    pub fn nearest_counterfactuals(
        &self,
        query_quantiles: &[f64],
        query_class: u8,
        k: usize,
    ) -> Vec<(usize, f64)> {
        let mut candidates: Vec<(usize, f64)> = (0..self.len())
            .filter(|&p| self.classes[p] != query_class)
            .map(|p| {
                let d = self
                    .quantiles(p)
                    .iter()
                    .zip(query_quantiles)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
                (p, d)
            })
            .collect();
        // Pool entries are in ascending row order, so the entry index is a
        // valid row-index tie-break.
        let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, cmp);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(cmp);
        candidates
    }
}

/// The K nearest opposite-class pool rows to `x` (fewer if the pool is
/// smaller), nearest first.
pub fn knn_counterfactuals(
    pool: &CounterfactualPool,
    qt: &QuantileTransform,
    e: &TreeEnsemble,
    x: &[f64],
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    let class = e.decide(x)?;
    let q = qt.to_quantile(x)?;
    let nearest = pool.nearest_counterfactuals(&q, class, k);
    if nearest.is_empty() {
        return Err(Error::NoCounterfactualPool { query_class: class });
    }
    Ok(nearest
        .into_iter()
        .map(|(p, _)| pool.point(p).to_vec())
        .collect())
}

/// Projects counterfactual points onto the decision boundary along the
/// segment from the query.
///
/// Along `x + alpha (nbr - x)` the margin only changes where some coordinate
/// crosses a split threshold, so the breakpoints are enumerated exactly and
/// checked in increasing order (each breakpoint and the open interval after
/// it). The first flipping bracket is then refined by bisection, giving the
/// smallest flipping `alpha` to within [`BoundaryProjector::ALPHA_TOL`].
#[derive(Debug, Clone)]
pub struct BoundaryProjector<'a> {
    ensemble: &'a TreeEnsemble,
    /// Sorted distinct split thresholds per feature.
    thresholds: Vec<Vec<f64>>,
}

impl<'a> BoundaryProjector<'a> {
    pub const ALPHA_TOL: f64 = 1e-9;
    pub const MAX_BISECTIONS: usize = 60;

    pub fn new(ensemble: &'a TreeEnsemble) -> Self {
        let mut thresholds = vec![Vec::new(); ensemble.n_features()];
        for node in ensemble.trees().iter().flat_map(|t| t.nodes()) {
            if !node.is_leaf() {
                thresholds[node.feature()].push(node.threshold());
            }
        }
        for t in &mut thresholds {
            t.sort_by(f64::total_cmp);
            t.dedup();
        }
        Self {
            ensemble,
            thresholds,
        }
    }

    fn at(x: &[f64], nbr: &[f64], alpha: f64, out: &mut [f64]) {
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(nbr) {
            *o = if a == b { a } else { a + alpha * (b - a) };
        }
    }

    pub fn project(&self, x: &[f64], nbr: &[f64]) -> Result<Vec<f64>> {
        let e = self.ensemble;
        let class = e.decide(x)?;
        if e.decide(nbr)? == class {
            return Err(Error::NotACounterfactual);
        }
        let mut breaks: Vec<f64> = Vec::new();
        for (j, (&a, &b)) in x.iter().zip(nbr).enumerate() {
            if a == b {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t = &self.thresholds[j];
            let start = t.partition_point(|&v| v < lo);
            let end = t.partition_point(|&v| v <= hi);
            breaks.extend(
                t[start..end]
                    .iter()
                    .map(|&thr| (thr - a) / (b - a))
                    .filter(|&alpha| alpha > 0.0 && alpha < 1.0),
            );
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.push(1.0);

        let mut p = vec![0.0; x.len()];
        let flips = |alpha: f64, p: &mut [f64]| {
            Self::at(x, nbr, alpha, p);
            e.class_of(p) != class
        };

        let mut lo = 0.0;
        let mut hi = None;
        for w in 0..breaks.len() {
            let alpha = breaks[w];
            if flips(alpha, &mut p) {
                hi = Some(alpha);
                break;
            }
            lo = alpha;
            if let Some(&next) = breaks.get(w + 1) {
                let mid = 0.5 * (alpha + next);
                if flips(mid, &mut p) {
                    hi = Some(mid);
                    break;
                }
                lo = mid;
            }
        }
        // The last breakpoint is 1, where nbr itself flips.
        let Some(mut hi) = hi else {
            return Ok(nbr.to_vec());
        };
        for _ in 0..Self::MAX_BISECTIONS {
            if hi - lo <= Self::ALPHA_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if flips(mid, &mut p) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi == 1.0 {
            return Ok(nbr.to_vec());
        }
        Self::at(x, nbr, hi, &mut p);
        Ok(p)
    }
}

/// One-off projection; build a [`BoundaryProjector`] to project many points.
pub fn project_to_boundary(e: &TreeEnsemble, x: &[f64], nbr: &[f64]) -> Result<Vec<f64>> {
    BoundaryProjector::new(e).project(x, nbr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, Tree};

    fn stump_model(thr: f64) -> TreeEnsemble {
        let t = Tree::new(
            vec![Node::split(0, thr, 1, 2), Node::leaf(-1.0), Node::leaf(1.0)],
            1,
        )
        .unwrap();
        TreeEnsemble::new(vec![t], 0.0, 1, 0.0).unwrap()
    }

    fn data(rows: &[&[f64]], labels: Option<Vec<u8>>) -> Dataset {
        Dataset::from_rows(rows.iter().map(|r| r.to_vec()).collect(), labels, None).unwrap()
    }

    #[test]
    fn spec_strings_parse() {
        let s: BackgroundSpec = "knn:K=100".parse().unwrap();
        assert_eq!(s.kind, BackgroundKind::Knn);
        assert_eq!(s.k, 100);
        assert_eq!(s.pool_cap, DEFAULT_POOL_CAP);
        let s: BackgroundSpec = "train:n=20,seed=7".parse().unwrap();
        assert_eq!((s.kind, s.sample_n, s.seed), (BackgroundKind::Train, 20, 7));
        assert_eq!(
            "knn-proj:K=10".parse::<BackgroundSpec>().unwrap().kind,
            BackgroundKind::KnnProjected
        );
        assert!("knn:K=0".parse::<BackgroundSpec>().is_err());
        assert!("knn:K=200,pool=100".parse::<BackgroundSpec>().is_err());
        assert!("dpred:n=abc".parse::<BackgroundSpec>().is_err());
        assert!("nope".parse::<BackgroundSpec>().is_err());
        let round: BackgroundSpec = s.to_string().parse().unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn train_sample_clamps_and_is_seeded() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(rows, None, None).unwrap();
        let all =
            background_train(&d, &BackgroundSpec::sampled(BackgroundKind::Train, 100)).unwrap();
        assert_eq!(all.len(), 50);
        let spec = BackgroundSpec::sampled(BackgroundKind::Train, 10).with_seed(3);
        let a = background_train(&d, &spec).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, background_train(&d, &spec).unwrap());
        assert_ne!(a, background_train(&d, &spec.with_seed(4)).unwrap());
    }

    #[test]
    fn dlab_filters_on_labels() {
        let d = data(&[&[1.0], &[2.0], &[3.0]], Some(vec![1, 0, 1]));
        let bg = background_dlab(&d, &BackgroundSpec::sampled(BackgroundKind::DLab, 10)).unwrap();
        assert_eq!(bg, vec![vec![1.0], vec![3.0]]);
        let none = data(&[&[1.0]], Some(vec![0]));
        assert!(matches!(
            background_dlab(&none, &BackgroundSpec::new(BackgroundKind::DLab)),
            Err(Error::NoRowsInClass { class: 1 })
        ));
    }

    #[test]
    fn dlab_ignores_predictions() {
        // Row 0 is labelled 1 but predicted 0 by the stump; still eligible.
        let d = data(&[&[-5.0], &[5.0]], Some(vec![1, 0]));
        let bg = background_dlab(&d, &BackgroundSpec::new(BackgroundKind::DLab)).unwrap();
        assert_eq!(bg, vec![vec![-5.0]]);
        assert_eq!(stump_model(0.0).decide(&[-5.0]).unwrap(), 0);
    }

    #[test]
    fn dpred_returns_opposite_predictions() {
        let e = stump_model(0.0);
        let d = data(&[&[-2.0], &[-1.0], &[1.0], &[2.0]], None);
        let bg = background_dpred(&d, &e, 1, &BackgroundSpec::new(BackgroundKind::DPred)).unwrap();
        assert!(bg.iter().all(|r| e.decide(r).unwrap() == 0));
        assert_eq!(bg.len(), 2);
        let always = TreeEnsemble::new(vec![], 1.0, 1, 0.0).unwrap();
        assert!(matches!(
            background_dpred(&d, &always, 1, &BackgroundSpec::new(BackgroundKind::DPred)),
            Err(Error::NoRowsInClass { .. })
        ));
    }

    #[test]
    fn knn_toy_matches_exhaustive_sort() {
        // Stump on feature 0 at 5: rows with x0 >= 5 are adverse.
        let t = Tree::new(
            vec![Node::split(0, 5.0, 1, 2), Node::leaf(-1.0), Node::leaf(1.0)],
            2,
        )
        .unwrap();
        let e = TreeEnsemble::new(vec![t], 0.0, 2, 0.0).unwrap();
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 9.0],
            vec![2.0, 3.0],
            vec![3.0, 6.0],
            vec![4.0, 1.0],
            vec![5.0, 2.0],
            vec![6.0, 4.0],
            vec![7.0, 5.0],
            vec![8.0, 7.0],
            vec![9.0, 8.0],
        ];
        let d = Dataset::from_rows(rows.clone(), None, None).unwrap();
        let qt = QuantileTransform::fit(&d).unwrap();
        let pool = CounterfactualPool::new(&d, &qt, &e, 10_000, 0).unwrap();
        let x = [6.0, 4.0];
        let qx = qt.to_quantile(&x).unwrap();
        // Oracle: all opposite-class rows sorted by L1 quantile distance.
        let mut oracle: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| e.decide(r).unwrap() == 0)
            .map(|(i, r)| {
                let q = qt.to_quantile(r).unwrap();
                (q.iter().zip(&qx).map(|(a, b)| (a - b).abs()).sum(), i)
            })
            .collect();
        oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        assert_eq!(oracle.len(), 5);
        let got = pool.nearest_counterfactuals(&qx, 1, 3);
        let got_rows: Vec<usize> = got.iter().map(|&(p, _)| pool.row_index(p)).collect();
        let want: Vec<usize> = oracle[..3].iter().map(|&(_, i)| i).collect();
        assert_eq!(got_rows, want);
        assert!(got.windows(2).all(|w| w[0].1 <= w[1].1));
        let knn = knn_counterfactuals(&pool, &qt, &e, &x, 3).unwrap();
        assert_eq!(knn[0], rows[want[0]]);
    }

    #[test]
    fn knn_returns_zero_distance_rows_first() {
        // 0.7 is not a training value of feature 1, so it shares its quantile
        // with 0.6 while the split at 0.65 separates the two.
        let t = Tree::new(
            vec![
                Node::split(1, 0.65, 1, 2),
                Node::leaf(-1.0),
                Node::leaf(1.0),
            ],
            2,
        )
        .unwrap();
        let e = TreeEnsemble::new(vec![t], 0.0, 2, 0.0).unwrap();
        let d = data(
            &[
                &[3.0, 0.6],
                &[1.0, 0.6],
                &[3.0, 0.6],
                &[9.0, 0.0],
                &[3.0, 1.0],
            ],
            None,
        );
        let qt = QuantileTransform::fit(&d).unwrap();
        let pool = CounterfactualPool::new(&d, &qt, &e, 100, 0).unwrap();
        let x = [3.0, 0.7];
        let q = qt.to_quantile(&x).unwrap();
        let near = pool.nearest_counterfactuals(&q, e.decide(&x).unwrap(), 2);
        assert_eq!(
            near.iter()
                .map(|&(p, _)| pool.row_index(p))
                .collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert!(near.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn knn_with_no_pool_is_an_error() {
        let e = TreeEnsemble::new(vec![], 1.0, 1, 0.0).unwrap();
        let d = data(&[&[1.0], &[2.0]], None);
        let qt = QuantileTransform::fit(&d).unwrap();
        let pool = CounterfactualPool::new(&d, &qt, &e, 100, 0).unwrap();
        assert!(matches!(
            knn_counterfactuals(&pool, &qt, &e, &[1.5], 5),
            Err(Error::NoCounterfactualPool { query_class: 1 })
        ));
    }

    #[test]
    fn projection_lands_just_past_a_stump() {
        let e = stump_model(5.0);
        let p = project_to_boundary(&e, &[8.0], &[0.0]).unwrap();
        assert_eq!(e.decide(&p).unwrap(), 0);
        assert!(p[0] < 5.0 && p[0] > 5.0 - 1e-7, "{p:?}");
        // Upward crossing: the threshold itself already goes right.
        let p = project_to_boundary(&e, &[0.0], &[8.0]).unwrap();
        assert_eq!(p, vec![5.0]);
        assert!(matches!(
            project_to_boundary(&e, &[0.0], &[1.0]),
            Err(Error::NotACounterfactual)
        ));
    }

    #[test]
    fn projection_picks_the_first_of_several_crossings() {
        // Margin along feature 0: adverse on [0,2), accepted on [2,3),
        // adverse on [3,6), accepted from 6.
        let t = Tree::new(
            vec![
                Node::split(0, 3.0, 1, 2),
                Node::split(0, 2.0, 3, 4),
                Node::split(0, 6.0, 5, 6),
                Node::leaf(1.0),
                Node::leaf(-1.0),
                Node::leaf(1.0),
                Node::leaf(-1.0),
            ],
            1,
        )
        .unwrap();
        let e = TreeEnsemble::new(vec![t], 0.0, 1, 0.0).unwrap();
        let (x, nbr) = ([0.5], [7.0]);
        let p = project_to_boundary(&e, &x, &nbr).unwrap();
        // Dense scan oracle along the segment at 1e-4 steps.
        let first = (1..=10_000)
            .map(|s| s as f64 * 1e-4)
            .find(|&a| e.decide(&[x[0] + a * (nbr[0] - x[0])]).unwrap() == 0)
            .unwrap();
        let alpha = (p[0] - x[0]) / (nbr[0] - x[0]);
        assert!(
            alpha <= first + 1e-9 && alpha > first - 1e-4,
            "alpha {alpha} vs scan {first}"
        );
        assert_eq!(e.decide(&p).unwrap(), 0);
    }
}
