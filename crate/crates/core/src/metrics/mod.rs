//! Classification metrics, ROC/PRC curves, curve averaging and composite
//! feature importance.

mod curves;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use curves::{
    average_curves, average_precision, prc_auc, prc_curve, roc_auc, roc_curve, AveragedCurve,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    BalancedAccuracy,
    Accuracy,
    F1,
    Sensitivity,
    Specificity,
    Precision,
    TruePositives,
    TrueNegatives,
    FalsePositives,
    FalseNegatives,
    Npv,
    LrPlus,
    LrMinus,
    RocAuc,
    PrcAuc,
    PrcAp,
}

impl MetricId {
    pub const ALL: [MetricId; 16] = [
        MetricId::BalancedAccuracy,
        MetricId::Accuracy,
        MetricId::F1,
        MetricId::Sensitivity,
        MetricId::Specificity,
        MetricId::Precision,
        MetricId::TruePositives,
        MetricId::TrueNegatives,
        MetricId::FalsePositives,
        MetricId::FalseNegatives,
        MetricId::Npv,
        MetricId::LrPlus,
        MetricId::LrMinus,
        MetricId::RocAuc,
        MetricId::PrcAuc,
        MetricId::PrcAp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::BalancedAccuracy => "balanced_accuracy",
            MetricId::Accuracy => "accuracy",
            MetricId::F1 => "f1",
            MetricId::Sensitivity => "sensitivity",
            MetricId::Specificity => "specificity",
            MetricId::Precision => "precision",
            MetricId::TruePositives => "tp",
            MetricId::TrueNegatives => "tn",
            MetricId::FalsePositives => "fp",
            MetricId::FalseNegatives => "fn",
            MetricId::Npv => "npv",
            MetricId::LrPlus => "lr_plus",
            MetricId::LrMinus => "lr_minus",
            MetricId::RocAuc => "roc_auc",
            MetricId::PrcAuc => "prc_auc",
            MetricId::PrcAp => "prc_ap",
        }
    }

    fn index(self) -> usize {
        MetricId::ALL.iter().position(|&m| m == self).unwrap_or(0)
    }

    /// False-positive/negative counts and LR- improve downward.
    pub fn higher_is_better(self) -> bool {
        !matches!(
            self,
            MetricId::FalsePositives | MetricId::FalseNegatives | MetricId::LrMinus
        )
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// Values of all 16 metrics for one evaluation, indexed by [`MetricId`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector(pub Vec<f64>);

impl MetricVector {
    pub fn get(&self, id: MetricId) -> f64 {
        self.0[id.index()]
    }
}

/// Threshold-based metrics from a confusion table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub balanced_accuracy: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub npv: f64,
    pub lr_plus: f64,
    pub lr_minus: f64,
}

/// `num / den`, with 0 for `0/0` and +inf for `x/0`, `x > 0`.
fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Metrics for predictions `p >= threshold`.
pub fn confusion_metrics(y_true: &[u8], y_prob: &[f64], threshold: f64) -> ConfusionMetrics {
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&y, &p) in y_true.iter().zip(y_prob) {
        match (y == 1, p >= threshold) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let (tpf, tnf, fpf, fnf) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let sensitivity = ratio_or_zero(tpf, tpf + fnf);
    let specificity = ratio_or_zero(tnf, tnf + fpf);
    let precision = ratio_or_zero(tpf, tpf + fpf);
    let npv = ratio_or_zero(tnf, tnf + fnf);
    let f1 = ratio_or_zero(2.0 * precision * sensitivity, precision + sensitivity);
    ConfusionMetrics {
        tp,
        tn,
        fp,
        fn_,
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        accuracy: ratio_or_zero(tpf + tnf, (tp + tn + fp + fn_) as f64),
        f1,
        sensitivity,
        specificity,
        precision,
        npv,
        lr_plus: ratio_or_inf(sensitivity, 1.0 - specificity),
        lr_minus: ratio_or_inf(1.0 - sensitivity, specificity),
    }
}

pub fn balanced_accuracy(y_true: &[u8], y_prob: &[f64]) -> f64 {
    confusion_metrics(y_true, y_prob, 0.5).balanced_accuracy
}

/// One metric at threshold 0.5. Curve metrics on a single-class vector fall
/// back to 0.5 (ROC) and 0 (PRC), so search scoring never fails.
pub fn metric_value(id: MetricId, y_true: &[u8], y_prob: &[f64]) -> f64 {
    match id {
        MetricId::RocAuc => roc_auc(y_true, y_prob).unwrap_or(0.5),
        MetricId::PrcAuc => prc_auc(y_true, y_prob).unwrap_or(0.0),
        MetricId::PrcAp => average_precision(y_true, y_prob).unwrap_or(0.0),
        _ => {
            let c = confusion_metrics(y_true, y_prob, 0.5);
            match id {
                MetricId::BalancedAccuracy => c.balanced_accuracy,
                MetricId::Accuracy => c.accuracy,
                MetricId::F1 => c.f1,
                MetricId::Sensitivity => c.sensitivity,
                MetricId::Specificity => c.specificity,
                MetricId::Precision => c.precision,
                MetricId::TruePositives => c.tp as f64,
                MetricId::TrueNegatives => c.tn as f64,
                MetricId::FalsePositives => c.fp as f64,
                MetricId::FalseNegatives => c.fn_ as f64,
                MetricId::Npv => c.npv,
                MetricId::LrPlus => c.lr_plus,
                _ => c.lr_minus,
            }
        }
    }
}

/// Full evaluation of one model on one data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricVector,
    pub roc: Vec<(f64, f64)>,
    pub prc: Vec<(f64, f64)>,
}

/// All 16 metrics plus curve samples. Requires both classes in `y_true`.
pub fn evaluate(y_true: &[u8], y_prob: &[f64]) -> Result<Evaluation> {
    let c = confusion_metrics(y_true, y_prob, 0.5);
    let roc = roc_curve(y_true, y_prob)?;
    let prc = prc_curve(y_true, y_prob)?;
    let values = vec![
        c.balanced_accuracy,
        c.accuracy,
        c.f1,
        c.sensitivity,
        c.specificity,
        c.precision,
        c.tp as f64,
        c.tn as f64,
        c.fp as f64,
        c.fn_ as f64,
        c.npv,
        c.lr_plus,
        c.lr_minus,
        curves::trapezoid(&roc),
        curves::trapezoid(&prc),
        average_precision(y_true, y_prob)?,
    ];
    Ok(Evaluation {
        metrics: MetricVector(values),
        roc,
        prc,
    })
}

/// Weighted, normalized feature importance summed over algorithms.
///
/// Each entry of `per_algorithm` is (scores over `features`, weight). Negative
/// scores clamp to 0, each vector is divided by its maximum (unless that is
/// 0), scaled by the weight, and the results are summed. Output is sorted by
/// descending composite score, ties in feature order.
pub fn composite_fi(features: &[String], per_algorithm: &[(Vec<f64>, f64)]) -> Vec<(String, f64)> {
    let mut total = vec![0.0; features.len()];
    for (scores, weight) in per_algorithm {
        let clamped: Vec<f64> = scores.iter().map(|&s| s.max(0.0)).collect();
        let max = clamped.iter().copied().fold(0.0, f64::max);
        let norm = if max > 0.0 { max } else { 1.0 };
        for (t, s) in total.iter_mut().zip(&clamped) {
            *t += s / norm * weight;
        }
    }
    let mut out: Vec<(String, f64)> = features.iter().cloned().zip(total).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}
