//! Nonparametric tests and the algorithm/dataset comparison procedures built on them.

mod nonparametric;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{MetricId, MetricVector};

pub use nonparametric::{average_ranks, kruskal_wallis, mann_whitney_u, wilcoxon_signed_rank, TestMethod, TestResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub a: String,
    pub b: String,
    pub mann_whitney: TestResult,
    pub wilcoxon: TestResult,
}

/// Omnibus test over named groups of fold values, with pairwise follow-ups
/// when the omnibus p-value is below the cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub metric: MetricId,
    pub kruskal: TestResult,
    pub pairwise: Vec<PairwiseRow>,
}

pub fn compare_groups(metric: MetricId, groups: &[(String, Vec<f64>)], sig_cutoff: f64) -> Result<GroupComparison> {
    let values: Vec<Vec<f64>> = groups.iter().map(|(_, v)| v.clone()).collect();
    let kruskal = kruskal_wallis(&values)?;
    let mut pairwise = Vec::new();
    if kruskal.p_value < sig_cutoff {
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                pairwise.push(PairwiseRow {
                    a: groups[i].0.clone(),
                    b: groups[j].0.clone(),
                    mann_whitney: mann_whitney_u(&groups[i].1, &groups[j].1)?,
                    wilcoxon: wilcoxon_signed_rank(&groups[i].1, &groups[j].1)?,
                });
            }
        }
    }
    Ok(GroupComparison {
        metric,
        kruskal,
        pairwise,
    })
}

fn column(folds: &[MetricVector], m: MetricId) -> Vec<f64> {
    folds.iter().map(|v| v.get(m)).collect()
}

/// Per metric: Kruskal-Wallis across algorithms' fold vectors, then gated
/// pairwise Mann-Whitney and Wilcoxon (paired on fold index).
/// Returns nothing when fewer than two algorithms are given.
pub fn compare_algorithms(per_algorithm: &[(String, Vec<MetricVector>)], sig_cutoff: f64) -> Result<Vec<GroupComparison>> {
    if per_algorithm.len() < 2 {
        return Ok(Vec::new());
    }
    MetricId::ALL
        .iter()
        .map(|&m| {
            let groups: Vec<(String, Vec<f64>)> =
                per_algorithm.iter().map(|(name, f)| (name.clone(), column(f, m))).collect();
            compare_groups(m, &groups, sig_cutoff)
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Algorithm with the best median fold value; earlier entries win ties.
pub fn best_algorithm(per_algorithm: &[(String, Vec<MetricVector>)], metric: MetricId) -> Option<usize> {
    let sign = if metric.higher_is_better() { 1.0 } else { -1.0 };
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, folds)) in per_algorithm.iter().enumerate() {
        let m = sign * median(&column(folds, metric));
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestAlgorithmComparison {
    /// (dataset, winning algorithm) per dataset.
    pub winners: Vec<(String, String)>,
    pub comparison: GroupComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetComparison {
    pub best_algorithm: Vec<BestAlgorithmComparison>,
    /// Per algorithm, one comparison per metric across datasets.
    pub per_algorithm: Vec<(String, Vec<GroupComparison>)>,
}

/// Cross-dataset comparisons. Each dataset lists its algorithms in a common
/// order; fold counts must agree.
pub fn compare_datasets(
    per_dataset: &[(String, Vec<(String, Vec<MetricVector>)>)],
    sig_cutoff: f64,
) -> Result<DatasetComparison> {
    let mut best_rows = Vec::new();
    for &m in &MetricId::ALL {
        let mut winners = Vec::new();
        let mut groups = Vec::new();
        for (ds, algs) in per_dataset {
            if let Some(i) = best_algorithm(algs, m) {
                winners.push((ds.clone(), algs[i].0.clone()));
                groups.push((ds.clone(), column(&algs[i].1, m)));
            }
        }
        best_rows.push(BestAlgorithmComparison {
            winners,
            comparison: compare_groups(m, &groups, sig_cutoff)?,
        });
    }
    let mut per_algorithm = Vec::new();
    if let Some((_, first)) = per_dataset.first() {
        for (alg, _) in first {
            let mut rows = Vec::new();
            for &m in &MetricId::ALL {
                let groups: Vec<(String, Vec<f64>)> = per_dataset
                    .iter()
                    .filter_map(|(ds, algs)| {
                        algs.iter()
                            .find(|(a, _)| a == alg)
                            .map(|(_, f)| (ds.clone(), column(f, m)))
                    })
                    .collect();
                rows.push(compare_groups(m, &groups, sig_cutoff)?);
            }
            per_algorithm.push((alg.clone(), rows));
        }
    }
    Ok(DatasetComparison {
        best_algorithm: best_rows,
        per_algorithm,
    })
}
