//! Metric, curve and significance tables shared by model evaluation and
//! replication.

use std::path::Path;

use super::store::{num, parse_num, Table};
use crate::error::{Error, Result};
use crate::metrics::{average_curves, AveragedCurve, Evaluation, MetricId, MetricVector};
use crate::stats::{best_algorithm, compare_algorithms, median, GroupComparison, TestResult};

pub const KRUSKAL_FILE: &str = "kruskal_wallis.csv";
pub const PAIRWISE_FILE: &str = "pairwise.csv";
pub const BEST_FILE: &str = "best_algorithms.csv";

pub fn metrics_file(alg: &str) -> String {
    format!("metrics_{alg}.csv")
}

fn metric_header(first: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(MetricId::ALL.iter().map(|m| m.as_str().to_string()))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn write_curve(path: &Path, c: &AveragedCurve) -> Result<()> {
    let mut t = Table::new(&["x", "mean", "std"]);
    for i in 0..c.grid.len() {
        t.push(vec![num(c.grid[i]), num(c.mean[i]), num(c.std[i])]);
    }
    t.write(path)
}

fn test_cells(r: &TestResult) -> Vec<String> {
    vec![num(r.statistic), num(r.p_value), r.method.as_str().to_string()]
}

pub fn significance_flag(p: f64, cutoff: f64) -> String {
    if p < cutoff { "*" } else { "" }.to_string()
}

/// Kruskal-Wallis and gated pairwise rows for a list of comparisons.
pub fn write_comparisons(dir: &Path, prefix: &str, label: &str, rows: &[(String, &GroupComparison)], cutoff: f64) -> Result<()> {
    let mut kw = Table::new(&[label, "metric", "statistic", "p_value", "method", "significant"]);
    let mut pw = Table::new(&[
        label,
        "metric",
        "a",
        "b",
        "mann_whitney_u",
        "mann_whitney_p",
        "wilcoxon_w",
        "wilcoxon_p",
        "significant_mann_whitney",
        "significant_wilcoxon",
    ]);
    for (name, c) in rows {
        let mut row = vec![name.clone(), c.metric.as_str().to_string()];
        row.extend(test_cells(&c.kruskal));
        row.push(significance_flag(c.kruskal.p_value, cutoff));
        kw.push(row);
        for p in &c.pairwise {
            pw.push(vec![
                name.clone(),
                c.metric.as_str().to_string(),
                p.a.clone(),
                p.b.clone(),
                num(p.mann_whitney.statistic),
                num(p.mann_whitney.p_value),
                num(p.wilcoxon.statistic),
                num(p.wilcoxon.p_value),
                significance_flag(p.mann_whitney.p_value, cutoff),
                significance_flag(p.wilcoxon.p_value, cutoff),
            ]);
        }
    }
    kw.write(&dir.join(format!("{prefix}{KRUSKAL_FILE}")))?;
    pw.write(&dir.join(format!("{prefix}{PAIRWISE_FILE}")))
}

/// Writes per-algorithm fold metrics, mean/median/std summaries, averaged
/// curves, best algorithms and algorithm comparisons.
pub fn write_evaluation_tables(
    dir: &Path,
    per_algorithm: &[(String, Vec<(usize, Evaluation)>)],
    sig_cutoff: f64,
) -> Result<Vec<GroupComparison>> {
    let mut summaries = [
        ("summary_mean.csv", Table::new(&metric_header("algorithm")), mean as fn(&[f64]) -> f64),
        ("summary_median.csv", Table::new(&metric_header("algorithm")), median as fn(&[f64]) -> f64),
        ("summary_std.csv", Table::new(&metric_header("algorithm")), std as fn(&[f64]) -> f64),
    ];
    let mut curve_auc = Table::new(&["algorithm", "mean_roc_auc", "mean_prc_auc"]);
    let mut vectors = Vec::new();
    for (alg, evals) in per_algorithm {
        let mut t = Table::new(&metric_header("fold"));
        for (fold, e) in evals {
            t.push(std::iter::once(fold.to_string()).chain(e.metrics.0.iter().map(|&v| num(v))).collect());
        }
        t.write(&dir.join(metrics_file(alg)))?;
        for (_, table, f) in &mut summaries {
            let row = MetricId::ALL
                .iter()
                .map(|&m| num(f(&evals.iter().map(|(_, e)| e.metrics.get(m)).collect::<Vec<_>>())));
            table.push(std::iter::once(alg.clone()).chain(row).collect());
        }
        let roc = average_curves(&evals.iter().map(|(_, e)| e.roc.clone()).collect::<Vec<_>>());
        let prc = average_curves(&evals.iter().map(|(_, e)| e.prc.clone()).collect::<Vec<_>>());
        write_curve(&dir.join(format!("roc_{alg}.csv")), &roc)?;
        write_curve(&dir.join(format!("prc_{alg}.csv")), &prc)?;
        curve_auc.push(vec![alg.clone(), num(roc.auc()), num(prc.auc())]);
        vectors.push((alg.clone(), evals.iter().map(|(_, e)| e.metrics.clone()).collect::<Vec<_>>()));
    }
    for (file, table, _) in &summaries {
        table.write(&dir.join(file))?;
    }
    curve_auc.write(&dir.join("curve_auc.csv"))?;

    let mut best = Table::new(&["metric", "algorithm", "median"]);
    for &m in &MetricId::ALL {
        if let Some(i) = best_algorithm(&vectors, m) {
            let vals: Vec<f64> = vectors[i].1.iter().map(|v| v.get(m)).collect();
            best.push(vec![m.as_str().to_string(), vectors[i].0.clone(), num(median(&vals))]);
        }
    }
    best.write(&dir.join(BEST_FILE))?;

    let comparisons = compare_algorithms(&vectors, sig_cutoff)?;
    let rows: Vec<(String, &GroupComparison)> = comparisons.iter().map(|c| ("all".to_string(), c)).collect();
    write_comparisons(dir, "", "scope", &rows, sig_cutoff)?;
    Ok(comparisons)
}

/// Reads fold metric vectors back from a `metrics_<alg>.csv` table.
pub fn read_metric_table(path: &Path) -> Result<Vec<MetricVector>> {
    let t = Table::read(path)?;
    if t.header != metric_header("fold") {
        return Err(Error::data(format!("{} is not a metric table", path.display())));
    }
    t.rows
        .iter()
        .map(|r| r[1..].iter().map(|s| parse_num(s)).collect::<Result<Vec<f64>>>().map(MetricVector))
        .collect()
}
