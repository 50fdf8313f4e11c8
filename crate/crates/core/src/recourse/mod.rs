//! Counterfactual-ability of a feature attribution.
//!
//! A user who receives `(phi, tau)` is modelled as moving along a half-line
//! in quantile space: only the top-k features with positive attribution
//! move, each in the direction of its trend, with magnitudes proportional to
//! `phi` (proportional action) or to a per-user random utility vector
//! (random action). The first point on that half-line where the decision
//! flips is the induced counterfactual; its negated quantile-shift cost is
//! the counterfactual-ability, `-inf` when the half-line never flips.

mod benchmark;

pub use benchmark::{
    plot_csv, run_benchmark, BenchmarkConfig, BenchmarkRecord, BenchmarkReport, Method, Metric,
};

use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::Trend;
use crate::error::{Error, Result};
use crate::model::TreeEnsemble;
use crate::quantile::QuantileTransform;

/// Steps of the uniform bracketing scan along the half-line.
pub const N_SCAN: usize = 1000;
/// Bisection steps inside the first flipping bracket.
pub const N_BISECT: usize = 40;
/// Neighbours used by the plausibility score.
pub const PLAUSIBILITY_NEIGHBOURS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Proportional,
    Random,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Proportional => "proportional",
            Self::Random => "random",
        }
    }
}

impl std::str::FromStr for ActionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(Self::Proportional),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidSpec(format!("unknown action kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostNorm {
    L1,
    L2,
}

impl CostNorm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::L1 => "l1",
            Self::L2 => "l2",
        }
    }

    #[inline]
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Self::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

impl std::str::FromStr for CostNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "L1" => Ok(Self::L1),
            "l2" | "L2" => Ok(Self::L2),
            other => Err(Error::InvalidSpec(format!("unknown cost norm '{other}'"))),
        }
    }
}

/// How the action direction is signed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionConvention {
    /// `dir_i = |w_i| * tau_i * mask_i`: the trend gives the sign.
    #[default]
    TrendAligned,
    /// `dir_i = -w_i * tau_i * mask_i`, the opposite reading.
    Negated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub kind: ActionKind,
    /// Number of top features the user acts on.
    pub k: usize,
    /// Per-feature utilities in (0, 1); required for [`ActionKind::Random`].
    pub random_vector: Option<Vec<f64>>,
    pub convention: DirectionConvention,
}

impl ActionSpec {
    pub fn proportional(k: usize) -> Self {
        Self {
            kind: ActionKind::Proportional,
            k,
            random_vector: None,
            convention: DirectionConvention::default(),
        }
    }

    pub fn random(k: usize, r: Vec<f64>) -> Self {
        Self {
            kind: ActionKind::Random,
            k,
            random_vector: Some(r),
            convention: DirectionConvention::default(),
        }
    }
}

/// `mask_i` is set iff `phi_i > 0` and `phi_i` is among the `k` largest
/// values; ties at the cut-off go to the lower feature index.
pub fn top_k_positive_mask(phi: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] > 0.0).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    let mut mask = vec![false; phi.len()];
    for &i in order.iter().take(k) {
        mask[i] = true;
    }
    mask
}

/// Direction of the action half-line in quantile space, unnormalised.
pub fn action_direction(phi: &[f64], tau: &[Trend], spec: &ActionSpec) -> Result<Vec<f64>> {
    if tau.len() != phi.len() {
        return Err(Error::LengthMismatch {
            left: phi.len(),
            right: tau.len(),
        });
    }
    let mask = top_k_positive_mask(phi, spec.k.max(1));
    let magnitude: Vec<f64> = match spec.kind {
        ActionKind::Proportional => phi.iter().map(|p| p.abs()).collect(),
        ActionKind::Random => {
            let r = spec.random_vector.as_ref().ok_or_else(|| {
                Error::InvalidSpec("random action requires a random vector".into())
            })?;
            if r.len() != phi.len() {
                return Err(Error::LengthMismatch {
                    left: phi.len(),
                    right: r.len(),
                });
            }
            r.clone()
        }
    };
    let sign = match spec.convention {
        DirectionConvention::TrendAligned => 1.0,
        DirectionConvention::Negated => -1.0,
    };
    let dir: Vec<f64> = (0..phi.len())
        // phi_i > 0 under the mask, so |phi_i| = phi_i for either convention.
        .map(|i| {
            if mask[i] {
                sign * magnitude[i] * f64::from(tau[i])
            } else {
                0.0
            }
        })
        .collect();
    if dir.iter().all(|&d| d == 0.0) {
        return Err(Error::EmptyActionSubset);
    }
    Ok(dir)
}

/// Quantile-shift cost between two points.
pub fn cost(qt: &QuantileTransform, x: &[f64], x_prime: &[f64], norm: CostNorm) -> Result<f64> {
    let a = qt.to_quantile(x)?;
    let b = qt.to_quantile(x_prime)?;
    Ok(norm.distance(&a, &b))
}

pub fn cost_l1(qt: &QuantileTransform, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    cost(qt, x, x_prime, CostNorm::L1)
}

pub fn cost_l2(qt: &QuantileTransform, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    cost(qt, x, x_prime, CostNorm::L2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedCounterfactual {
    pub point: Vec<f64>,
    /// Step along the unnormalised direction: `Q(point) ~ Q(x) + lambda * dir`
    /// before clamping and discretisation.
    pub lambda: f64,
    /// Spacing of the bracketing scan, in the same units as `lambda`.
    pub scan_resolution: f64,
}

/// Walks the half-line `clamp(Q(x) + lambda * dir)` and returns the point at
/// the smallest decision-flipping `lambda`, or `None` if the decision never
/// flips before every moving coordinate saturates.
///
/// The search is a uniform scan of [`N_SCAN`] steps up to full saturation,
/// then [`N_BISECT`] bisection steps in the first flipping bracket.
/// Coordinates outside the direction's support keep the query's exact value.
pub fn induced_counterfactual(
    x: &[f64],
    dir: &[f64],
    e: &TreeEnsemble,
    qt: &QuantileTransform,
) -> Result<Option<InducedCounterfactual>> {
    let m = qt.n_features();
    for len in [x.len(), dir.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: len,
            });
        }
    }
    e.decide(x)?;
    let scale = dir.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if scale == 0.0 {
        return Err(Error::EmptyActionSubset);
    }
    // Work with the direction normalised to unit max-norm so the walk does
    // not depend on the attribution's overall scale.
    let active: Vec<(usize, f64)> = dir
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0.0)
        .map(|(i, &d)| (i, d / scale))
        .collect();
    let q0 = qt.to_quantile(x)?;
    let t_max = active
        .iter()
        .map(|&(i, u)| {
            if u > 0.0 {
                (1.0 - q0[i]) / u
            } else {
                q0[i] / -u
            }
        })
        .fold(0.0f64, f64::max);
    if t_max == 0.0 {
        return Ok(None);
    }

    let class = e.class_of(x);
    let mut point = x.to_vec();
    let flips = |t: f64, point: &mut Vec<f64>| {
        for &(i, u) in &active {
            let q = (q0[i] + t * u).clamp(0.0, 1.0);
            point[i] = qt.feature_value(i, q);
        }
        e.class_of(point) != class
    };

    let step = t_max / N_SCAN as f64;
    let Some(j) = (1..=N_SCAN).find(|&j| flips(step * j as f64, &mut point)) else {
        return Ok(None);
    };
    let mut lo = step * (j - 1) as f64;
    let mut hi = step * j as f64;
    for _ in 0..N_BISECT {
        let mid = 0.5 * (lo + hi);
        if flips(mid, &mut point) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flipped = flips(hi, &mut point);
    debug_assert!(flipped);
    Ok(Some(InducedCounterfactual {
        point,
        lambda: hi / scale,
        scan_resolution: step / scale,
    }))
}

/// Negated cost of the induced counterfactual, `-inf` when none exists or
/// the action subset is empty.
pub fn counterfactual_ability(
    x: &[f64],
    phi: &[f64],
    tau: &[Trend],
    spec: &ActionSpec,
    norm: CostNorm,
    e: &TreeEnsemble,
    qt: &QuantileTransform,
) -> Result<f64> {
    Ok(evaluate(x, phi, tau, spec, norm, e, qt, None)?.cf_ability)
}

/// Pool of reference points (in quantile space) for plausibility.
#[derive(Debug, Clone)]
pub struct PlausibilityPool {
    quantiles: Vec<f64>,
    n_features: usize,
}

impl PlausibilityPool {
    pub fn from_points(points: &[Vec<f64>], qt: &QuantileTransform) -> Result<Self> {
        let m = qt.n_features();
        let mut quantiles = vec![0.0; points.len() * m];
        for (p, row) in points.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            qt.to_quantile_into(row, &mut quantiles[p * m..(p + 1) * m]);
        }
        Ok(Self {
            quantiles,
            n_features: m,
        })
    }

    pub fn from_counterfactual_pool(pool: &crate::background::CounterfactualPool) -> Self {
        let m = pool.n_features();
        let mut quantiles = Vec::with_capacity(pool.len() * m);
        for p in 0..pool.len() {
            quantiles.extend_from_slice(pool.quantiles(p));
        }
        Self {
            quantiles,
            n_features: m,
        }
    }

    pub fn len(&self) -> usize {
        self.quantiles.len().checked_div(self.n_features).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Negated mean distance from `x_prime` to its five nearest pool points,
    /// nearest and mean both under `norm` in quantile space.
    pub fn plausibility(
        &self,
        qt: &QuantileTransform,
        x_prime: &[f64],
        norm: CostNorm,
    ) -> Result<f64> {
        if self.len() < PLAUSIBILITY_NEIGHBOURS {
            return Err(Error::PoolTooSmall {
                needed: PLAUSIBILITY_NEIGHBOURS,
                found: self.len(),
            });
        }
        let q = qt.to_quantile(x_prime)?;
        let mut dists: Vec<f64> = self
            .quantiles
            .chunks_exact(self.n_features)
            .map(|row| norm.distance(row, &q))
            .collect();
        dists.select_nth_unstable_by(PLAUSIBILITY_NEIGHBOURS - 1, f64::total_cmp);
        let nearest = &mut dists[..PLAUSIBILITY_NEIGHBOURS];
        nearest.sort_by(f64::total_cmp);
        Ok(-nearest.iter().sum::<f64>() / PLAUSIBILITY_NEIGHBOURS as f64)
    }
}

/// Plausibility of `x_prime` against a pool of feature-space points.
pub fn plausibility(
    x_prime: &[f64],
    pool: &[Vec<f64>],
    qt: &QuantileTransform,
    norm: CostNorm,
) -> Result<f64> {
    PlausibilityPool::from_points(pool, qt)?.plausibility(qt, x_prime, norm)
}

/// `mean(1[a > b] - 1[a < b])`. Two `-inf` entries compare equal.
pub fn improvement(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    if scores_a.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let net: i64 = scores_a
        .iter()
        .zip(scores_b)
        .map(|(a, b)| i64::from(a > b) - i64::from(a < b))
        .sum();
    Ok(net as f64 / scores_a.len() as f64)
}

fn serialize_score<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("inf")
    }
}

/// Outcome of evaluating one attribution for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub query: Vec<f64>,
    pub induced_cf: Option<Vec<f64>>,
    pub lambda_star: Option<f64>,
    pub cost: Option<f64>,
    #[serde(serialize_with = "serialize_score")]
    pub cf_ability: f64,
    pub plausibility: Option<f64>,
    pub scan_resolution: Option<f64>,
}

impl EvalRecord {
    fn none(x: &[f64]) -> Self {
        Self {
            query: x.to_vec(),
            induced_cf: None,
            lambda_star: None,
            cost: None,
            cf_ability: f64::NEG_INFINITY,
            plausibility: None,
            scan_resolution: None,
        }
    }

    /// Plausibility with a missing counterfactual ranked below any value.
    pub fn plausibility_score(&self) -> f64 {
        self.plausibility.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Induced counterfactual, cost, counterfactual-ability and (given a pool)
/// plausibility of one attribution. An empty action subset is a valid
/// outcome with `cf_ability = -inf`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    x: &[f64],
    phi: &[f64],
    tau: &[Trend],
    spec: &ActionSpec,
    norm: CostNorm,
    e: &TreeEnsemble,
    qt: &QuantileTransform,
    pool: Option<&PlausibilityPool>,
) -> Result<EvalRecord> {
    let dir = match action_direction(phi, tau, spec) {
        Ok(d) => d,
        Err(Error::EmptyActionSubset) => return Ok(EvalRecord::none(x)),
        Err(e) => return Err(e),
    };
    let induced = induced_counterfactual(x, &dir, e, qt)?;
    Ok(match induced {
        None => EvalRecord::none(x),
        Some(cf) => record_for(x, cf, norm, qt, pool)?,
    })
}

pub(crate) fn record_for(
    x: &[f64],
    cf: InducedCounterfactual,
    norm: CostNorm,
    qt: &QuantileTransform,
    pool: Option<&PlausibilityPool>,
) -> Result<EvalRecord> {
    let c = cost(qt, x, &cf.point, norm)?;
    let plausibility = match pool {
        Some(p) => Some(p.plausibility(qt, &cf.point, norm)?),
        None => None,
    };
    Ok(EvalRecord {
        query: x.to_vec(),
        lambda_star: Some(cf.lambda),
        cost: Some(c),
        cf_ability: -c,
        plausibility,
        scan_resolution: Some(cf.scan_resolution),
        induced_cf: Some(cf.point),
    })
}
