use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Cells, Column, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Names of the non-feature columns of a delimited file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelimitedLayout {
    pub outcome: String,
    pub id: Option<String>,
    pub group: Option<String>,
}

impl DelimitedLayout {
    pub fn new(outcome: impl Into<String>) -> Self {
        DelimitedLayout {
            outcome: outcome.into(),
            id: None,
            group: None,
        }
    }

    pub fn with_id(mut self, id: Option<String>) -> Self {
        self.id = id;
        self
    }

    pub fn with_group(mut self, group: Option<String>) -> Self {
        self.group = group;
        self
    }
}

/// Empty cells, `NA` and `nan` (any case) are read as missing.
pub fn is_missing_marker(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

pub fn load_delimited(
    path: &Path,
    outcome_name: &str,
    id_name: Option<&str>,
    match_name: Option<&str>,
) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let layout = DelimitedLayout::new(outcome_name)
        .with_id(id_name.map(str::to_owned))
        .with_group(match_name.map(str::to_owned));
    read_delimited(file, &layout)
}

pub fn read_delimited<R: Read>(reader: R, layout: &DelimitedLayout) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::data(format!("duplicate header name '{h}'")));
        }
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let outcome_idx = find(&layout.outcome)
        .ok_or_else(|| Error::data(format!("outcome column '{}' not found", layout.outcome)))?;
    let id_idx = match &layout.id {
        Some(n) => Some(find(n).ok_or_else(|| Error::data(format!("instance id column '{n}' not found")))?),
        None => None,
    };
    let group_idx = match &layout.group {
        Some(n) => Some(find(n).ok_or_else(|| Error::data(format!("match column '{n}' not found")))?),
        None => None,
    };

    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != outcome_idx && Some(i) != id_idx && Some(i) != group_idx)
        .collect();

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); feature_idx.len()];
    let mut outcome = Vec::new();
    let mut ids = Vec::new();
    let mut groups = Vec::new();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        outcome.push(parse_outcome(cell(outcome_idx), &layout.outcome)?);
        ids.push(match id_idx {
            Some(i) => cell(i).trim().to_string(),
            None => row.to_string(),
        });
        if let Some(i) = group_idx {
            groups.push(cell(i).trim().to_string());
        }
        for (slot, &i) in raw.iter_mut().zip(&feature_idx) {
            let c = cell(i);
            slot.push(if is_missing_marker(c) {
                None
            } else {
                Some(c.trim().to_string())
            });
        }
    }

    let columns = feature_idx
        .iter()
        .zip(raw)
        .map(|(&i, cells)| typed_column(&headers[i], cells))
        .collect();

    Dataset::new(
        layout.outcome.clone(),
        ids,
        outcome,
        columns,
        group_idx.map(|_| groups),
    )
}

fn parse_outcome(cell: &str, column: &str) -> Result<Option<u8>> {
    if is_missing_marker(cell) {
        return Ok(None);
    }
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(Some(0)),
        Ok(v) if v == 1.0 => Ok(Some(1)),
        _ => Err(Error::NonBinaryOutcome {
            column: column.to_string(),
            value: t.to_string(),
        }),
    }
}

fn typed_column(name: &str, cells: Vec<Option<String>>) -> Column {
    let parsed: Option<Vec<Option<f64>>> = cells
        .iter()
        .map(|c| match c {
            None => Some(None),
            Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
        })
        .collect();
    match parsed {
        Some(values) => Column::numeric(name, FeatureKind::Quantitative, values),
        None => Column::text(name, cells),
    }
}

/// Write a dataset as CSV: id column, features, outcome, then the group column if any.
///
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_delimited<W: Write>(ds: &Dataset, writer: W, layout: &DelimitedLayout) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let id_name = layout.id.clone().unwrap_or_else(|| "instance_id".to_string());
    let mut header = vec![id_name];
    header.extend(ds.columns.iter().map(|c| c.name.clone()));
    header.push(ds.outcome_name.clone());
    if let (Some(_), Some(g)) = (&ds.group_labels, &layout.group) {
        header.push(g.clone());
    }
    wtr.write_record(&header)?;
    for row in 0..ds.n_instances() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(ds.instance_ids[row].clone());
        for col in &ds.columns {
            rec.push(match &col.cells {
                Cells::Numeric(v) => v[row].map(format_value).unwrap_or_default(),
                Cells::Text(v) => v[row].clone().unwrap_or_default(),
            });
        }
        rec.push(ds.outcome[row].map(|y| y.to_string()).unwrap_or_default());
        if let (Some(g), Some(_)) = (&ds.group_labels, &layout.group) {
            rec.push(g[row].clone());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub(crate) fn format_value(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Dataset> {
        read_delimited(text.as_bytes(), &DelimitedLayout::new("class"))
    }

    #[test]
    fn parses_three_rows() {
        let ds = read("f,class\n1.5,0\n2,1\n3,0\n").unwrap();
        assert_eq!(ds.n_instances(), 3);
        assert_eq!(ds.outcome, vec![Some(0), Some(1), Some(0)]);
        assert_eq!(ds.columns[0].values().unwrap()[0], Some(1.5));
    }

    #[test]
    fn rejects_non_binary_outcome() {
        let err = read("f,class\n1,0\n2,2\n").unwrap_err();
        assert!(err.to_string().contains("non-binary outcome"), "{err}");
        assert!(err.to_string().contains("'2'"));
    }

    #[test]
    fn empty_cell_is_missing() {
        let ds = read("f,g,class\n1,a,0\n,b,1\nNA,NaN,0\n").unwrap();
        let f = &ds.columns[0];
        assert_eq!(f.values().unwrap(), &[Some(1.0), None, None]);
        assert!(ds.columns[1].is_text());
        assert!(ds.columns[1].cells.is_missing(2));
    }

    #[test]
    fn missing_outcome_column_and_duplicate_headers() {
        assert!(read("f,g\n1,2\n").is_err());
        assert!(read("f,f,class\n1,2,0\n").is_err());
    }

    #[test]
    fn missing_outcome_is_kept() {
        let ds = read("f,class\n1,\n2,1\n").unwrap();
        assert_eq!(ds.outcome, vec![None, Some(1)]);
    }

    #[test]
    fn id_and_match_columns_are_not_features() {
        let layout = DelimitedLayout::new("class")
            .with_id(Some("id".into()))
            .with_group(Some("pair".into()));
        let ds = read_delimited("id,f,pair,class\nr1,1,A,0\nr2,2,A,1\n".as_bytes(), &layout).unwrap();
        assert_eq!(ds.feature_names(), vec!["f"]);
        assert_eq!(ds.instance_ids, vec!["r1", "r2"]);
        assert_eq!(ds.group_labels.as_deref(), Some(&["A".to_string(), "A".to_string()][..]));
    }

    #[test]
    fn write_then_read_is_exact() {
        let ds = read("f,g,class\n0.1,x,0\n,y,1\n3.3333333333333335,,1\n").unwrap();
        let layout = DelimitedLayout::new("class").with_id(Some("id".into()));
        let mut buf = Vec::new();
        write_delimited(&ds, &mut buf, &layout).unwrap();
        let back = read_delimited(&buf[..], &layout).unwrap();
        assert_eq!(back.columns, ds.columns);
        assert_eq!(back.outcome, ds.outcome);
    }
}
