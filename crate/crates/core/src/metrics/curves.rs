use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn class_totals(y_true: &[u8]) -> Result<(usize, usize)> {
    let n1 = y_true.iter().filter(|&&y| y == 1).count();
    let n0 = y_true.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::data("curve metrics need both classes in y_true"));
    }
    Ok((n0, n1))
}

/// Cumulative (tp, fp) after each distinct score, visiting scores high to low.
fn sweep(y_true: &[u8], y_prob: &[f64]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| y_prob[b].total_cmp(&y_prob[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (pos, &i) in order.iter().enumerate() {
        if y_true[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = order
            .get(pos + 1)
            .is_none_or(|&j| y_prob[j] != y_prob[i]);
        if last_of_tie {
            out.push((tp, fp));
        }
    }
    out
}

/// ROC polyline (fpr, tpr) from (0, 0) to (1, 1).
pub fn roc_curve(y_true: &[u8], y_prob: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (n0, n1) = class_totals(y_true)?;
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(
        sweep(y_true, y_prob)
            .into_iter()
            .map(|(tp, fp)| (fp as f64 / n0 as f64, tp as f64 / n1 as f64)),
    );
    Ok(pts)
}

/// Precision-recall polyline (recall, precision), starting at (0, 1).
pub fn prc_curve(y_true: &[u8], y_prob: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (_, n1) = class_totals(y_true)?;
    let mut pts = vec![(0.0, 1.0)];
    pts.extend(
        sweep(y_true, y_prob)
            .into_iter()
            .map(|(tp, fp)| (tp as f64 / n1 as f64, tp as f64 / (tp + fp) as f64)),
    );
    Ok(pts)
}

pub(crate) fn trapezoid(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub fn roc_auc(y_true: &[u8], y_prob: &[f64]) -> Result<f64> {
    Ok(trapezoid(&roc_curve(y_true, y_prob)?))
}

pub fn prc_auc(y_true: &[u8], y_prob: &[f64]) -> Result<f64> {
    Ok(trapezoid(&prc_curve(y_true, y_prob)?))
}

/// Step-wise area: sum over thresholds of (recall gain) x precision.
pub fn average_precision(y_true: &[u8], y_prob: &[f64]) -> Result<f64> {
    let pts = prc_curve(y_true, y_prob)?;
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * w[1].1).sum())
}

/// Mean and spread of several curves on a shared 101-point grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedCurve {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AveragedCurve {
    pub fn auc(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.grid.iter().copied().zip(self.mean.iter().copied()).collect();
        trapezoid(&pts)
    }
}

/// Value of a polyline (sorted by x) at `g`: take the last vertex with x <= g
/// and interpolate linearly towards the following vertex.
fn interpolate(pts: &[(f64, f64)], g: f64) -> f64 {
    let Some(i) = pts.iter().rposition(|p| p.0 <= g) else {
        return pts[0].1;
    };
    match pts.get(i + 1) {
        Some(&(x1, y1)) if x1 > pts[i].0 => {
            let (x0, y0) = pts[i];
            y0 + (y1 - y0) * (g - x0) / (x1 - x0)
        }
        _ => pts[i].1,
    }
}

/// Vertical averaging of curves given as (x, y) polylines with x ascending.
pub fn average_curves(curves: &[Vec<(f64, f64)>]) -> AveragedCurve {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    for &g in &grid {
        let ys: Vec<f64> = curves.iter().map(|c| interpolate(c, g)).collect();
        let n = ys.len().max(1) as f64;
        let m = ys.iter().sum::<f64>() / n;
        let v = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n;
        mean.push(m);
        std.push(v.sqrt());
    }
    AveragedCurve { grid, mean, std }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scores() {
        let y = [0, 0, 1, 1, 1];
        let p = [0.0, 0.0, 1.0, 1.0, 1.0];
        assert_eq!(roc_auc(&y, &p).unwrap(), 1.0);
        assert_eq!(average_precision(&y, &p).unwrap(), 1.0);
        assert_eq!(prc_auc(&y, &p).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores() {
        let y = [0, 1, 1, 0, 1];
        let p = [0.3; 5];
        assert_eq!(roc_auc(&y, &p).unwrap(), 0.5);
        assert!((average_precision(&y, &p).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(roc_auc(&[1, 1], &[0.1, 0.2]).is_err());
        assert!(average_precision(&[0, 0], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn averaging_identical_and_single() {
        let c = roc_curve(&[0, 1, 0, 1], &[0.1, 0.9, 0.6, 0.4]).unwrap();
        let one = average_curves(std::slice::from_ref(&c));
        let two = average_curves(&[c.clone(), c.clone()]);
        assert_eq!(one.mean, two.mean);
        assert!(one.std.iter().all(|&s| s == 0.0));
        for (g, m) in one.grid.iter().zip(&one.mean) {
            assert_eq!(*m, interpolate(&c, *g));
        }
    }

    #[test]
    fn averaging_perfect_with_chance() {
        let perfect = roc_curve(&[0, 1], &[0.0, 1.0]).unwrap();
        let chance = roc_curve(&[0, 1], &[0.5, 0.5]).unwrap();
        let avg = average_curves(&[perfect, chance]);
        assert!((avg.auc() - 0.75).abs() < 0.01, "{}", avg.auc());
        assert_eq!(avg.mean[0], 0.5);
        assert_eq!(avg.mean[100], 1.0);
    }

    #[test]
    fn interpolation_between_vertices() {
        let pts = [(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)];
        assert!((interpolate(&pts, 0.25) - 0.5).abs() < 1e-12);
        assert_eq!(interpolate(&pts, 1.0), 1.0);
    }
}
