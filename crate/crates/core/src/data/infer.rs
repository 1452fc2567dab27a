use std::collections::BTreeSet;

use super::{Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Assign a [`FeatureKind`] to every column.
///
/// Declarations win; otherwise a column with fewer distinct non-missing
/// values than `categorical_cutoff` is categorical.
pub fn infer_feature_types(
    ds: &Dataset,
    categorical_cutoff: usize,
    declared_categorical: &BTreeSet<String>,
    declared_quantitative: &BTreeSet<String>,
) -> Result<Dataset> {
    for name in declared_categorical.iter().chain(declared_quantitative) {
        if ds.column(name).is_none() {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    if let Some(both) = declared_categorical.intersection(declared_quantitative).next() {
        return Err(Error::data(format!(
            "feature '{both}' declared both categorical and quantitative"
        )));
    }
    let mut out = ds.clone();
    for col in &mut out.columns {
        col.kind = if declared_categorical.contains(&col.name) {
            FeatureKind::Categorical
        } else if declared_quantitative.contains(&col.name) {
            FeatureKind::Quantitative
        } else if col.distinct_count() < categorical_cutoff {
            FeatureKind::Categorical
        } else {
            FeatureKind::Quantitative
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn ds(cols: Vec<Column>) -> Dataset {
        let n = cols[0].len();
        Dataset::new("y", (0..n).map(|i| i.to_string()).collect(), vec![Some(0); n], cols, None).unwrap()
    }

    fn col(name: &str, values: impl IntoIterator<Item = f64>) -> Column {
        Column::numeric(name, FeatureKind::Quantitative, values.into_iter().map(Some).collect())
    }

    #[test]
    fn binary_is_categorical() {
        let d = ds(vec![col("b", [0.0, 1.0, 1.0, 0.0])]);
        let out = infer_feature_types(&d, 10, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        assert_eq!(out.columns[0].kind, FeatureKind::Categorical);
    }

    #[test]
    fn many_distinct_values_are_quantitative() {
        let d = ds(vec![col("age", (0..73).map(|a| 20.0 + a as f64))]);
        let out = infer_feature_types(&d, 10, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        assert_eq!(out.columns[0].kind, FeatureKind::Quantitative);
    }

    #[test]
    fn declaration_takes_precedence() {
        let d = ds(vec![col("q", [1.0, 2.0, 3.0])]);
        let quant: BTreeSet<String> = ["q".to_string()].into();
        let out = infer_feature_types(&d, 10, &BTreeSet::new(), &quant).unwrap();
        assert_eq!(out.columns[0].kind, FeatureKind::Quantitative);
    }

    #[test]
    fn unknown_or_overlapping_declarations_fail() {
        let d = ds(vec![col("q", [1.0, 2.0])]);
        let bad: BTreeSet<String> = ["nope".to_string()].into();
        assert!(infer_feature_types(&d, 10, &bad, &BTreeSet::new()).is_err());
        let q: BTreeSet<String> = ["q".to_string()].into();
        assert!(infer_feature_types(&d, 10, &q, &q).is_err());
    }

    #[test]
    fn row_order_does_not_matter() {
        let d = ds(vec![col("a", [3.0, 1.0, 2.0, 1.0]), col("b", (0..4).map(f64::from))]);
        let rev = d.select_rows(&[3, 2, 1, 0]);
        let x = infer_feature_types(&d, 4, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        let y = infer_feature_types(&rev, 4, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        let kinds = |d: &Dataset| d.columns.iter().map(|c| c.kind).collect::<Vec<_>>();
        assert_eq!(kinds(&x), kinds(&y));
    }
}
