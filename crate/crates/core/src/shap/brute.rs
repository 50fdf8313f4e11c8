use super::Attribution;
use crate::error::{Error, Result};
use crate::model::TreeEnsemble;

/// Largest feature count accepted by [`shapley_brute_force`].
pub const MAX_BRUTE_FORCE_FEATURES: usize = 20;

fn check(e: &TreeEnsemble, x: &[f64], background: &[Vec<f64>]) -> Result<()> {
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
    Ok(())
}

fn value_of_mask(
    e: &TreeEnsemble,
    x: &[f64],
    background: &[Vec<f64>],
    mask: u64,
    hybrid: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for b in background {
        for (j, h) in hybrid.iter_mut().enumerate() {
            *h = if mask >> j & 1 == 1 { x[j] } else { b[j] };
        }
        total += e.margin(hybrid);
    }
    total / background.len() as f64
}

/// `v(S)`: mean margin over the background of the point that takes `x` on
/// the features in `coalition` and the background point elsewhere.
pub fn characteristic_value(
    e: &TreeEnsemble,
    x: &[f64],
    background: &[Vec<f64>],
    coalition: &[usize],
) -> Result<f64> {
    check(e, x, background)?;
    let m = e.n_features();
    let mut in_s = vec![false; m];
    for &j in coalition {
        if j >= m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: j + 1,
            });
        }
        in_s[j] = true;
    }
    let mut hybrid = vec![0.0; m];
    let mut total = 0.0;
    for b in background {
        for j in 0..m {
            hybrid[j] = if in_s[j] { x[j] } else { b[j] };
        }
        total += e.margin(&hybrid);
    }
    Ok(total / background.len() as f64)
}

/// Exact Shapley values by enumerating all `2^m` coalitions. Costs
/// `2^m * |background|` ensemble evaluations.
pub fn shapley_brute_force(
    e: &TreeEnsemble,
    x: &[f64],
    background: &[Vec<f64>],
) -> Result<Attribution> {
    check(e, x, background)?;
    let m = e.n_features();
    if m > MAX_BRUTE_FORCE_FEATURES {
        return Err(Error::TooManyFeatures {
            max: MAX_BRUTE_FORCE_FEATURES,
            found: m,
        });
    }
    let mut hybrid = vec![0.0; m];
    let values: Vec<f64> = (0..1u64 << m)
        .map(|mask| value_of_mask(e, x, background, mask, &mut hybrid))
        .collect();

    // w(s) = s! (m-s-1)! / m! = 1 / (m * C(m-1, s))
    let weights: Vec<f64> = (0..m)
        .map(|s| {
            let mut binom = 1.0f64;
            for k in 0..s {
                binom = binom * (m - 1 - k) as f64 / (k + 1) as f64;
            }
            1.0 / (m as f64 * binom)
        })
        .collect();

    let phi = (0..m)
        .map(|i| {
            let bit = 1u64 << i;
            (0..1u64 << m)
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    weights[mask.count_ones() as usize]
                        * (values[(mask | bit) as usize] - values[mask as usize])
                })
                .sum()
        })
        .collect();

    Ok(Attribution {
        phi,
        expected_background_output: values[0],
        query: x.to_vec(),
        background_size: background.len(),
    })
}
