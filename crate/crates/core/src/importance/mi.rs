use std::collections::BTreeMap;

use crate::data::{value_key, FeatureKind};
use crate::models::ModelData;

pub const MAX_BINS: usize = 10;

/// Equal-frequency bin index per value. Tied values share the bin of their
/// first position in sorted order.
pub fn quantile_bins(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut first: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, v) in sorted.iter().enumerate() {
        first.entry(value_key(*v)).or_insert(i);
    }
    let bins = MAX_BINS.min(first.len()).max(1);
    values
        .iter()
        .map(|v| first[&value_key(*v)] * bins / n)
        .collect()
}

/// Plug-in mutual information in nats between discrete codes and a binary outcome.
pub fn discrete_mi(codes: &[u64], y: &[u8]) -> f64 {
    let n = codes.len() as f64;
    if codes.is_empty() {
        return 0.0;
    }
    let mut joint: BTreeMap<(u64, u8), f64> = BTreeMap::new();
    let mut px: BTreeMap<u64, f64> = BTreeMap::new();
    let mut py = [0.0f64; 2];
    for (&c, &t) in codes.iter().zip(y) {
        *joint.entry((c, t)).or_default() += 1.0;
        *px.entry(c).or_default() += 1.0;
        py[usize::from(t)] += 1.0;
    }
    let mut mi = 0.0;
    for (&(c, t), &count) in &joint {
        let pxy = count / n;
        mi += pxy * (pxy / ((px[&c] / n) * (py[usize::from(t)] / n))).ln();
    }
    mi.max(0.0)
}

/// One score per feature: categorical features use their values directly,
/// quantitative ones are binned first.
pub fn mutual_information(data: &ModelData) -> Vec<f64> {
    (0..data.names.len())
        .map(|j| {
            let col: Vec<f64> = data.x.column(j).to_vec();
            let codes: Vec<u64> = match data.kinds[j] {
                FeatureKind::Categorical => col.iter().map(|v| value_key(*v)).collect(),
                FeatureKind::Quantitative => quantile_bins(&col).into_iter().map(|b| b as u64).collect(),
            };
            discrete_mi(&codes, &data.y)
        })
        .collect()
}
