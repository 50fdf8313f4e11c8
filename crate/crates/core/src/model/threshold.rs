//! Decision-threshold selection on the ROC curve.

use serde::Serialize;

use super::TreeEnsemble;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdObjective {
    /// TPR - FPR.
    Youden,
    /// TPR + FPR, taken literally. Maximal at the lowest candidate on almost
    /// every dataset.
    Literal,
}

impl std::str::FromStr for ThresholdObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "youden" => Ok(Self::Youden),
            "literal" => Ok(Self::Literal),
            other => Err(Error::InvalidSpec(format!(
                "unknown threshold mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSelection {
    /// Margin-space threshold.
    pub threshold: f64,
    pub objective_value: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// Set when every score is identical and no midpoint exists.
    pub degenerate: bool,
}

pub fn select_threshold_roc(
    e: &TreeEnsemble,
    d: &Dataset,
    objective: ThresholdObjective,
) -> Result<ThresholdSelection> {
    let labels = d.labels().ok_or(Error::MissingLabels)?;
    let scores = d
        .rows()
        .map(|r| e.predict_margin(r))
        .collect::<Result<Vec<_>>>()?;
    select_threshold_from_scores(&scores, labels, objective)
}

/// Sweeps the midpoints between consecutive distinct scores; a row is
/// predicted positive when its score is strictly above the threshold. Ties in
/// the objective go to the smaller threshold.
pub fn select_threshold_from_scores(
    scores: &[f64],
    labels: &[u8],
    objective: ThresholdObjective,
) -> Result<ThresholdSelection> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassDataset);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let (p, n) = (positives as f64, negatives as f64);
    let score_of = |tp: usize, fp: usize| {
        let (tpr, fpr) = (tp as f64 / p, fp as f64 / n);
        let value = match objective {
            ThresholdObjective::Youden => tpr - fpr,
            ThresholdObjective::Literal => tpr + fpr,
        };
        (value, tpr, fpr)
    };

    // Ascending sweep: rows strictly above the candidate are positive.
    let (mut tp, mut fp) = (positives, negatives);
    let mut best: Option<ThresholdSelection> = None;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        if i == order.len() {
            break;
        }
        let t = 0.5 * (s + scores[order[i]]);
        let (value, tpr, fpr) = score_of(tp, fp);
        if best.is_none_or(|b| value > b.objective_value) {
            best = Some(ThresholdSelection {
                threshold: t,
                objective_value: value,
                tpr,
                fpr,
                degenerate: false,
            });
        }
    }
    Ok(best.unwrap_or_else(|| {
        // A single distinct score: every row is predicted negative at t = s.
        let (value, tpr, fpr) = score_of(0, 0);
        ThresholdSelection {
            threshold: scores[0],
            objective_value: value,
            tpr,
            fpr,
            degenerate: true,
        }
    }))
}
