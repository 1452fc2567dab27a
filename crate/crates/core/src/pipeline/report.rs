//! Plain-text summaries assembled from persisted artifacts only.

use std::fmt::Write as _;
use std::path::Path;

use super::phases::{read_eda, COMPOSITE_FI_FILE, EDA_INITIAL, EDA_PROCESSED, EDA_REPLICATION, PROCESSING_LOG_JSON};
use super::store::{read_json, write_text, Table};
use super::tables::{BEST_FILE, KRUSKAL_FILE};
use super::Experiment;
use crate::error::Result;
use crate::processing::ProcessingLog;

pub const REPORT_FILE: &str = "report.txt";
pub const REPLICATION_REPORT_FILE: &str = "replication_report.txt";

fn rel(exp: &Experiment, path: &Path) -> String {
    path.strip_prefix(&exp.root).unwrap_or(path).display().to_string()
}

fn section(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n== {title} ==");
}

/// Appends a table, right-padding each column to its widest cell.
fn table(out: &mut String, t: &Table) {
    let mut widths: Vec<usize> = t.header.iter().map(String::len).collect();
    for r in &t.rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(&t.header));
    for r in &t.rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Keeps the significant rows of a Kruskal-Wallis table.
fn significant(t: &Table) -> Result<Table> {
    let flag = t.column("significant")?;
    Ok(Table {
        header: t.header.clone(),
        rows: t.rows.iter().filter(|r| r[flag] == "*").cloned().collect(),
    })
}

/// Mean of the primary metric per algorithm from a `summary_mean.csv`.
fn primary_summary(exp: &Experiment, dir: &Path) -> Result<Table> {
    let t = Table::read(&dir.join("summary_mean.csv"))?;
    let m = t.column(exp.config.primary_metric.as_str())?;
    let mut out = Table::new(&["algorithm", &format!("mean_{}", exp.config.primary_metric.as_str())]);
    for r in &t.rows {
        out.push(vec![r[0].clone(), r[m].clone()]);
    }
    Ok(out)
}

fn dataset_section(exp: &Experiment, name: &str, out: &mut String, artifacts: &mut Vec<String>) -> Result<()> {
    let p1 = exp.phase_dir(name, 1);
    let p6 = exp.phase_dir(name, 6);
    section(out, &format!("dataset {name}"));
    let initial = read_eda(&p1.join(EDA_INITIAL))?;
    let processed = read_eda(&p1.join(EDA_PROCESSED))?;
    for (label, e) in [("initial", &initial), ("processed", &processed)] {
        let _ = writeln!(
            out,
            "{label}: {} instances ({} negative, {} positive), {} features ({} categorical, {} quantitative), {} missing cells",
            e.n_instances, e.class_counts.0, e.class_counts.1, e.n_features, e.n_categorical, e.n_quantitative, e.total_missing
        );
    }

    let log: ProcessingLog = read_json(&p1.join(PROCESSING_LOG_JSON))?;
    let mut steps = Table::new(&["step", "instances", "features", "removed", "added"]);
    for e in &log.entries {
        steps.push(vec![
            e.step.clone(),
            format!("{} -> {}", e.instances_before, e.instances_after),
            format!("{} -> {}", e.features_before, e.features_after),
            (e.removed_features.len() + e.removed_instances.len()).to_string(),
            e.added_features.len().to_string(),
        ]);
    }
    let _ = writeln!(out, "\nprocessing:");
    table(out, &steps);

    let _ = writeln!(out, "\n{}:", exp.config.primary_metric.as_str());
    table(out, &primary_summary(exp, &p6)?);

    let _ = writeln!(out, "\nbest algorithm per metric (median over folds):");
    table(out, &Table::read(&p6.join(BEST_FILE))?);

    let kw = significant(&Table::read(&p6.join(KRUSKAL_FILE))?)?;
    if kw.rows.is_empty() {
        let _ = writeln!(out, "\nno metric differs significantly across algorithms");
    } else {
        let _ = writeln!(out, "\nmetrics differing across algorithms (*):");
        table(out, &kw);
    }

    let mut fi = Table::read(&p6.join(COMPOSITE_FI_FILE))?;
    fi.rows.truncate(exp.config.top_fi_features);
    let _ = writeln!(out, "\ntop {} features by composite importance:", fi.rows.len());
    table(out, &fi);

    for path in [
        p1.join(PROCESSING_LOG_JSON),
        p1.join("univariate.csv"),
        p6.join("summary_mean.csv"),
        p6.join(KRUSKAL_FILE),
        p6.join("pairwise.csv"),
        p6.join(COMPOSITE_FI_FILE),
    ] {
        artifacts.push(rel(exp, &path));
    }
    Ok(())
}

fn comparison_section(exp: &Experiment, out: &mut String, artifacts: &mut Vec<String>) -> Result<()> {
    let dir = exp.comparison_dir();
    section(out, "dataset comparison");
    let _ = writeln!(out, "best algorithm per dataset and metric:");
    table(out, &Table::read(&dir.join("best_algorithm_winners.csv"))?);
    for prefix in ["best_algorithm_", "per_algorithm_"] {
        let path = dir.join(format!("{prefix}{KRUSKAL_FILE}"));
        let kw = significant(&Table::read(&path)?)?;
        let _ = writeln!(out, "\n{} significant differences across datasets ({}):", kw.rows.len(), prefix.trim_end_matches('_'));
        table(out, &kw);
        artifacts.push(rel(exp, &path));
    }
    Ok(())
}

fn replication_report(exp: &Experiment) -> Result<String> {
    let mut out = String::new();
    let target = exp.replication_target().to_string();
    let _ = writeln!(out, "replication of models trained on {target}");
    for (rep, _) in exp.replication_names() {
        let dir = exp.replication_dir(&target, &rep);
        section(&mut out, &format!("replication {rep}"));
        let e = read_eda(&dir.join(EDA_REPLICATION))?;
        let _ = writeln!(
            out,
            "{} instances ({} negative, {} positive), {} missing cells",
            e.n_instances, e.class_counts.0, e.class_counts.1, e.total_missing
        );
        let _ = writeln!(out, "\n{}:", exp.config.primary_metric.as_str());
        table(&mut out, &primary_summary(exp, &dir)?);
        let _ = writeln!(out, "\nbest algorithm per metric:");
        table(&mut out, &Table::read(&dir.join(BEST_FILE))?);
        let kw = significant(&Table::read(&dir.join(KRUSKAL_FILE))?)?;
        let _ = writeln!(out, "\n{} metrics differ significantly across algorithms", kw.rows.len());
        table(&mut out, &kw);
    }
    Ok(out)
}

/// Writes the experiment report, plus the replication report when
/// replication data is configured.
pub(super) fn phase9(exp: &Experiment) -> Result<()> {
    let mut out = String::new();
    let mut artifacts = Vec::new();
    let _ = writeln!(out, "experiment report for {}", exp.root.display());
    section(&mut out, "configuration");
    out.push_str(&exp.config.to_text());
    for d in &exp.datasets {
        dataset_section(exp, &d.name, &mut out, &mut artifacts)?;
    }
    if exp.datasets.len() >= 2 && exp.comparison_dir().join(super::MARKER_FILE).exists() {
        comparison_section(exp, &mut out, &mut artifacts)?;
    }

    section(&mut out, "runtimes");
    let mut rt = Table::new(&["phase", "scope", "seconds"]);
    for (p, s, secs) in exp.runtimes() {
        if p < 9 {
            rt.push(vec![p.to_string(), s, format!("{secs:.3}")]);
        }
    }
    table(&mut out, &rt);

    let summary = exp.summary_dir();
    if !exp.config.replication_data.is_empty() {
        write_text(&summary.join(REPLICATION_REPORT_FILE), &replication_report(exp)?)?;
        artifacts.push(rel(exp, &summary.join(REPLICATION_REPORT_FILE)));
    }
    section(&mut out, "artifacts");
    for a in artifacts {
        let _ = writeln!(out, "{a}");
    }
    write_text(&summary.join(REPORT_FILE), &out)
}
