use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Cells, Column, Dataset, FeatureKind};

pub const BASE_INSTANCES: usize = 165;
pub const BASE_POSITIVES: usize = 63;
pub const BASE_BINARY: usize = 23;
pub const BASE_QUANTITATIVE: usize = 24;
pub const COVARIATES: [&str; 2] = ["Gender", "Age"];
const BASE_MISSING: f64 = 0.1;
const SPARSE_MISSING: f64 = 0.7;

fn maybe<R: Rng>(rng: &mut R, missing: f64, v: f64) -> Option<f64> {
    (rng.random::<f64>() >= missing).then_some(v)
}

/// Each level appears at least once, in shuffled order.
fn levels<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|i| i % k).collect();
    v.shuffle(rng);
    v
}

fn continuous<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| (rng.random_range(0.0..100.0f64) * 100.0).round() / 100.0).collect()
}

/// Centred copy of `x` plus an orthogonal component sized for correlation `r`.
fn with_correlation(x: &[f64], noise: &[f64], r: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let mz = noise.iter().sum::<f64>() / n;
    let zc: Vec<f64> = noise.iter().map(|v| v - mz).collect();
    let proj = xc.iter().zip(&zc).map(|(a, b)| a * b).sum::<f64>() / xc.iter().map(|a| a * a).sum::<f64>();
    let e: Vec<f64> = zc.iter().zip(&xc).map(|(b, a)| b - proj * a).collect();
    let sx = xc.iter().map(|a| a * a).sum::<f64>().sqrt();
    let se = e.iter().map(|a| a * a).sum::<f64>().sqrt();
    let c = sx / se * (1.0 / (r * r) - 1.0).sqrt();
    xc.iter().zip(&e).map(|(a, b)| 50.0 + a + c * b).collect()
}

/// An HCC-shaped base table: 165 instances (63 positive), 49 features
/// including the two covariates, binary categoricals and continuous
/// quantitatives, about 10% missing.
pub fn hcc_like_base(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = BASE_INSTANCES;
    let mut y: Vec<u8> = (0..n).map(|i| u8::from(i < BASE_POSITIVES)).collect();
    y.shuffle(&mut rng);
    let mut columns = Vec::new();
    let gender = (0..n).map(|_| Some(f64::from(rng.random_range(0..2u8)))).collect();
    columns.push(Column::numeric("Gender", FeatureKind::Quantitative, gender));
    let age = (0..n).map(|_| Some(f64::from(rng.random_range(20..90u8)))).collect();
    columns.push(Column::numeric("Age", FeatureKind::Quantitative, age));
    for k in 0..BASE_BINARY {
        let v = (0..n)
            .map(|i| {
                let signal = if k < 4 { f64::from(y[i]) } else { 0.0 };
                let bit = if rng.random::<f64>() < 0.25 * signal + 0.4 { 1.0 } else { 0.0 };
                maybe(&mut rng, BASE_MISSING, bit)
            })
            .collect();
        columns.push(Column::numeric(format!("Bin{k}"), FeatureKind::Quantitative, v));
    }
    for k in 0..BASE_QUANTITATIVE {
        let v = (0..n)
            .map(|i| {
                let shift = if k < 4 { 15.0 * f64::from(y[i]) } else { 0.0 };
                let x = (rng.random_range(0.0..100.0f64) + shift).round();
                maybe(&mut rng, BASE_MISSING, x)
            })
            .collect();
        columns.push(Column::numeric(format!("Quant{k}"), FeatureKind::Quantitative, v));
    }
    Dataset {
        outcome_name: "Class".to_string(),
        instance_ids: (0..n).map(|i| format!("hcc_{i}")).collect(),
        outcome: y.into_iter().map(Some).collect(),
        columns,
        group_labels: None,
    }
}

fn push_numeric(ds: &mut Dataset, name: &str, values: Vec<Option<f64>>) {
    ds.columns.push(Column::numeric(name, FeatureKind::Quantitative, values));
}

/// The base table plus simulated columns and instances that exercise each
/// cleaning and engineering step:
///
/// * numeric categoricals with 2, 3 and 4 levels and text categoricals with
///   2, 3 and 4 levels
/// * three sparse features (two continuous, one with five levels)
/// * correlated pairs at -1.0, 0.9 and 1.0
/// * an invariant feature, an all-missing feature and an invariant feature
///   with some missing cells
/// * two instances with no outcome and two instances that are mostly missing
pub fn hcc_like_custom(seed: u64) -> Dataset {
    let mut ds = hcc_like_base(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = ds.n_instances();

    for k in [2usize, 3, 4] {
        let v = levels(&mut rng, n, k).into_iter().map(|l| Some(l as f64)).collect();
        push_numeric(&mut ds, &format!("sim_cat_num_{k}"), v);
    }
    let words = ["alpha", "beta", "gamma", "delta"];
    for k in [2usize, 3, 4] {
        let v = levels(&mut rng, n, k).into_iter().map(|l| Some(words[l].to_string())).collect();
        ds.columns.push(Column::text(format!("sim_cat_text_{k}"), v));
    }
    for k in 1..=2 {
        let v = continuous(&mut rng, n).into_iter().map(|x| maybe(&mut rng, SPARSE_MISSING, x)).collect();
        push_numeric(&mut ds, &format!("sim_sparse_{k}"), v);
    }
    let v = (0..n)
        .map(|_| {
            let x = f64::from(rng.random_range(0..5u8));
            maybe(&mut rng, SPARSE_MISSING, x)
        })
        .collect();
    push_numeric(&mut ds, "sim_sparse_3", v);

    let x = continuous(&mut rng, n);
    push_numeric(&mut ds, "sim_corr_neg_a", x.iter().map(|&v| Some(v)).collect());
    push_numeric(&mut ds, "sim_corr_neg_b", x.iter().map(|&v| Some(100.0 - v)).collect());
    let x = continuous(&mut rng, n);
    let noise = continuous(&mut rng, n);
    push_numeric(&mut ds, "sim_corr_09_a", x.iter().map(|&v| Some(v)).collect());
    push_numeric(&mut ds, "sim_corr_09_b", with_correlation(&x, &noise, 0.9).into_iter().map(Some).collect());
    let x = continuous(&mut rng, n);
    push_numeric(&mut ds, "sim_corr_pos_a", x.iter().map(|&v| Some(v)).collect());
    push_numeric(&mut ds, "sim_corr_pos_b", x.iter().map(|&v| Some(2.0 * v + 3.0)).collect());

    push_numeric(&mut ds, "sim_invariant", vec![Some(1.0); n]);
    push_numeric(&mut ds, "sim_all_missing", vec![None; n]);
    let v = (0..n).map(|_| maybe(&mut rng, 0.3, 1.0)).collect();
    push_numeric(&mut ds, "sim_invariant_missing", v);

    // Extra instances copy random existing rows so their values look realistic.
    for k in 1..=2 {
        let src = rng.random_range(0..n);
        append_copy(&mut ds, src, &format!("sim_no_outcome_{k}"), None, 0.0, &mut rng);
    }
    for k in 1..=2 {
        let src = rng.random_range(0..n);
        let label = Some(rng.random_range(0..2u8));
        append_copy(&mut ds, src, &format!("sim_high_missing_{k}"), label, 0.8, &mut rng);
    }
    ds
}

fn append_copy<R: Rng>(ds: &mut Dataset, src: usize, id: &str, outcome: Option<u8>, missing: f64, rng: &mut R) {
    ds.instance_ids.push(id.to_string());
    ds.outcome.push(outcome);
    for col in &mut ds.columns {
        let drop = rng.random::<f64>() < missing;
        match &mut col.cells {
            Cells::Numeric(v) => {
                let x = if drop { None } else { v[src] };
                v.push(x);
            }
            Cells::Text(v) => {
                let x = if drop { None } else { v[src].clone() };
                v.push(x);
            }
        }
    }
}

pub const REPLICATION_NO_OUTCOME: usize = 3;

/// Replication table for [`hcc_like_custom`]: 30% of instances get values
/// resampled from their columns and a random outcome, three instances have
/// no outcome, and one instance carries levels never seen in training for
/// the binary and 3-level categoricals and the invariant columns.
pub fn hcc_like_replication(seed: u64) -> Dataset {
    let custom = hcc_like_custom(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
    let labelled: Vec<usize> = (0..custom.n_instances()).filter(|&i| custom.outcome[i].is_some()).collect();
    let mut ds = custom.select_rows(&labelled);
    ds.instance_ids = ds.instance_ids.iter().map(|id| format!("rep_{id}")).collect();
    let n = ds.n_instances();
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);
    let noisy = &rows[..(0.3 * n as f64).round() as usize];
    for &r in noisy {
        ds.outcome[r] = Some(rng.random_range(0..2u8));
        for col in &mut ds.columns {
            match &mut col.cells {
                Cells::Numeric(v) => {
                    let pick = v[rng.random_range(0..n)];
                    v[r] = pick;
                }
                Cells::Text(v) => {
                    let pick = v[rng.random_range(0..n)].clone();
                    v[r] = pick;
                }
            }
        }
    }
    for k in 1..=REPLICATION_NO_OUTCOME {
        let src = rng.random_range(0..n);
        append_copy(&mut ds, src, &format!("rep_no_outcome_{k}"), None, 0.0, &mut rng);
    }
    let src = rng.random_range(0..n);
    append_copy(&mut ds, src, "rep_unseen_levels", Some(1), 0.0, &mut rng);
    let last = ds.n_instances() - 1;
    for col in &mut ds.columns {
        match (col.name.as_str(), &mut col.cells) {
            ("sim_cat_text_2" | "sim_cat_text_3", Cells::Text(v)) => v[last] = Some("omega".to_string()),
            ("sim_cat_num_2" | "sim_cat_num_3", Cells::Numeric(v)) => v[last] = Some(9.0),
            ("sim_invariant" | "sim_invariant_missing", Cells::Numeric(v)) => v[last] = Some(2.0),
            _ => {}
        }
    }
    ds
}
