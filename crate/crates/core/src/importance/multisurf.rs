use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::data::FeatureKind;
use crate::error::{Error, Result};
use crate::models::ModelData;

/// Per-feature difference scale: range for quantitative features, 0 for
/// categorical ones (which use a mismatch indicator instead).
fn ranges(data: &ModelData) -> Vec<f64> {
    (0..data.names.len())
        .map(|j| {
            let col = data.x.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect()
}

#[inline]
fn diff(kind: FeatureKind, range: f64, a: f64, b: f64) -> f64 {
    match kind {
        FeatureKind::Categorical => f64::from(u8::from(a != b)),
        FeatureKind::Quantitative if range > 0.0 => (a - b).abs() / range,
        FeatureKind::Quantitative => 0.0,
    }
}

/// Targets scored: every instance, or a seeded sample of `instance_subset`
/// when there are more.
pub fn choose_targets<R: Rng>(n: usize, instance_subset: usize, rng: &mut R) -> Vec<usize> {
    if n <= instance_subset {
        return (0..n).collect();
    }
    let mut t = sample(rng, n, instance_subset).into_vec();
    t.sort_unstable();
    t
}

fn target_contribution(data: &ModelData, ranges: &[f64], i: usize) -> Vec<f64> {
    let n = data.n();
    let p = data.names.len();
    let row_i = data.x.row(i);
    let dist: Vec<f64> = (0..n)
        .map(|j| {
            if j == i {
                return 0.0;
            }
            let row_j = data.x.row(j);
            (0..p).map(|f| diff(data.kinds[f], ranges[f], row_i[f], row_j[f])).sum()
        })
        .collect();
    let m = (n - 1) as f64;
    let mean = dist.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| d).sum::<f64>() / m;
    let var = dist
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| (d - mean).powi(2))
        .sum::<f64>()
        / m;
    let cut = mean - var.sqrt() / 2.0;
    let mut out = vec![0.0; p];
    for j in (0..n).filter(|&j| j != i && dist[j] < cut) {
        let sign = if data.y[j] == data.y[i] { -1.0 } else { 1.0 };
        let row_j = data.x.row(j);
        for f in 0..p {
            out[f] += sign * diff(data.kinds[f], ranges[f], row_i[f], row_j[f]);
        }
    }
    out
}

/// MultiSURF scores. Every instance is a candidate neighbor; only the
/// targets chosen by [`choose_targets`] are scored. The per-target sums are
/// combined in target order, so the result does not depend on thread count.
pub fn multisurf<R: Rng>(data: &ModelData, instance_subset: usize, rng: &mut R) -> Result<Vec<f64>> {
    let n = data.n();
    if n < 3 {
        return Err(Error::data(format!("MultiSURF needs at least 3 instances, got {n}")));
    }
    let targets = choose_targets(n, instance_subset, rng);
    Ok(multisurf_with_targets(data, &targets))
}

pub fn multisurf_with_targets(data: &ModelData, targets: &[usize]) -> Vec<f64> {
    let r = ranges(data);
    let parts: Vec<Vec<f64>> = targets.par_iter().map(|&i| target_contribution(data, &r, i)).collect();
    let mut scores = vec![0.0; data.names.len()];
    for part in &parts {
        for (s, v) in scores.iter_mut().zip(part) {
            *s += v;
        }
    }
    let t = targets.len() as f64;
    scores.iter_mut().for_each(|s| *s /= t);
    scores
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurfScores {
    pub scores: Vec<f64>,
    /// Round in which each feature was dropped; `None` for survivors.
    pub removed_round: Vec<Option<usize>>,
}

/// Iterative MultiSURF: each round drops the lowest-scoring
/// `ceil(turf_pct * p)` features until `ceil(turf_pct * p)` remain.
///
/// A dropped feature keeps its last score shifted down by a per-round
/// offset, so features dropped earlier always rank below later ones.
/// The same targets are used in every round.
pub fn turf<R: Rng>(data: &ModelData, turf_pct: f64, instance_subset: usize, rng: &mut R) -> Result<TurfScores> {
    if !(turf_pct > 0.0 && turf_pct < 1.0) {
        return Err(Error::data(format!("turf_pct must lie in (0, 1), got {turf_pct}")));
    }
    let n = data.n();
    if n < 3 {
        return Err(Error::data(format!("MultiSURF needs at least 3 instances, got {n}")));
    }
    let p = data.names.len();
    let targets = choose_targets(n, instance_subset, rng);
    let step = ((turf_pct * p as f64).ceil() as usize).max(1);
    let keep = ((turf_pct * p as f64).ceil() as usize).max(1);

    let mut remaining: Vec<usize> = (0..p).collect();
    let mut raw = vec![0.0; p];
    let mut removed_round: Vec<Option<usize>> = vec![None; p];
    let mut round = 0;
    loop {
        let scores = multisurf_with_targets(&data.select_features(&remaining), &targets);
        for (k, &f) in remaining.iter().enumerate() {
            raw[f] = scores[k];
        }
        if remaining.len() <= keep {
            break;
        }
        let drop = step.min(remaining.len() - keep);
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let mut gone: Vec<usize> = order[..drop].iter().map(|&k| remaining[k]).collect();
        gone.sort_unstable();
        for &f in &gone {
            removed_round[f] = Some(round);
        }
        remaining.retain(|f| gone.binary_search(f).is_err());
        round += 1;
    }
    let rounds = round;
    let m = raw.iter().fold(0.0f64, |a, s| a.max(s.abs())) + 1.0;
    let scores = (0..p)
        .map(|f| match removed_round[f] {
            Some(r) => raw[f] - (rounds - r) as f64 * 2.0 * m,
            None => raw[f],
        })
        .collect();
    Ok(TurfScores { scores, removed_round })
}
