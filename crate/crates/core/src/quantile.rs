//! Empirical per-feature quantile transform and its pseudo-inverse.
//!
//! The CDF of feature `i` is the right-continuous step function
//! `F_i(v) = #{training values <= v} / n`, so a training point maps to its
//! rank over `n`. Values below the training minimum map to 0 and values at or
//! above the maximum map to 1.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTransform {
    sorted: Vec<Vec<f64>>,
    n: usize,
}

impl QuantileTransform {
    pub fn fit(d: &Dataset) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sorted = (0..d.n_features())
            .map(|j| {
                let mut col: Vec<f64> = d.column(j).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self {
            sorted,
            n: d.n_rows(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.sorted.len()
    }

    /// Sorted training values of feature `j`.
    pub fn table(&self, j: usize) -> &[f64] {
        &self.sorted[j]
    }

    #[inline]
    pub fn feature_quantile(&self, j: usize, v: f64) -> f64 {
        let count = self.sorted[j].partition_point(|&s| s <= v);
        count as f64 / self.n as f64
    }

    /// Smallest training value `v` of feature `j` with `F_j(v) >= q`.
    #[inline]
    pub fn feature_value(&self, j: usize, q: f64) -> f64 {
        let table = &self.sorted[j];
        let n = self.n as f64;
        // Smallest rank k in 1..=n with k/n >= q, using the same division as
        // `feature_quantile` so that exact ranks round-trip.
        let idx = partition_point_range(self.n, |k| ((k + 1) as f64 / n) < q);
        table[idx.min(self.n - 1)]
    }

    pub fn to_quantile(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.feature_quantile(j, v))
            .collect())
    }

    /// Writes `Q(x)` into `out` without allocating.
    pub fn to_quantile_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(x).enumerate() {
            *o = self.feature_quantile(j, v);
        }
    }

    pub fn from_quantile(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check(q.len())?;
        Ok(q.iter()
            .enumerate()
            .map(|(j, &p)| self.feature_value(j, p))
            .collect())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.sorted.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sorted.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// First `i` in `0..n` for which `pred(i)` is false, assuming `pred` is
/// true on a prefix.
fn partition_point_range(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
