use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{Cells, Column, Dataset};
use crate::error::{Error, Result};

/// Column -> text level -> integer code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    columns: BTreeMap<String, BTreeMap<String, u32>>,
}

impl LabelMap {
    pub fn levels(&self, column: &str) -> Option<&BTreeMap<String, u32>> {
        self.columns.get(column)
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn decode(&self, column: &str, code: u32) -> Option<&str> {
        self.columns
            .get(column)?
            .iter()
            .find(|(_, &c)| c == code)
            .map(|(level, _)| level.as_str())
    }

    /// Encode text columns with the stored codes.
    ///
    /// Strings not seen when the map was built get fresh codes above the known
    /// range (in lexicographic order), so downstream level checks can tell them apart.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let mut out = ds.clone();
        for col in &mut out.columns {
            let Cells::Text(values) = &col.cells else { continue };
            let levels = self.columns.get(&col.name).ok_or_else(|| {
                Error::data(format!(
                    "column '{}' holds text but had no text levels when the label map was built",
                    col.name
                ))
            })?;
            let mut unseen: Vec<&String> = values
                .iter()
                .flatten()
                .filter(|v| !levels.contains_key(*v))
                .collect();
            unseen.sort();
            unseen.dedup();
            let base = levels.values().max().map_or(0, |m| m + 1);
            let encoded = values
                .iter()
                .map(|v| {
                    v.as_ref().map(|s| {
                        let code = match levels.get(s) {
                            Some(&c) => c,
                            None => base + unseen.binary_search(&s).unwrap_or(0) as u32,
                        };
                        f64::from(code)
                    })
                })
                .collect();
            col.cells = Cells::Numeric(encoded);
        }
        Ok(out)
    }

    /// Tab-separated `column, level, code` rows under a version line.
    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer);
        w.write_record(["# label-map v1", "", ""])?;
        for (col, levels) in &self.columns {
            for (level, code) in levels {
                w.write_record([col.as_str(), level.as_str(), &code.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<label map>", e))?;
        Ok(())
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(false)
            .from_reader(reader);
        let mut map = LabelMap::default();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if i == 0 {
                if rec.get(0) != Some("# label-map v1") {
                    return Err(Error::data("unrecognised label map version"));
                }
                continue;
            }
            let (Some(col), Some(level), Some(code)) = (rec.get(0), rec.get(1), rec.get(2)) else {
                return Err(Error::data("malformed label map row"));
            };
            let code: u32 = code
                .parse()
                .map_err(|_| Error::data(format!("bad label code '{code}'")))?;
            map.columns
                .entry(col.to_string())
                .or_default()
                .insert(level.to_string(), code);
        }
        Ok(map)
    }
}

/// Replace every text column by integer codes assigned in lexicographic order.
pub fn encode_text_labels(ds: &Dataset) -> (Dataset, LabelMap) {
    let mut map = LabelMap::default();
    let columns = ds
        .columns
        .iter()
        .map(|col| match &col.cells {
            Cells::Numeric(_) => col.clone(),
            Cells::Text(values) => {
                let mut levels: Vec<&String> = values.iter().flatten().collect();
                levels.sort();
                levels.dedup();
                let codes: BTreeMap<String, u32> = levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| ((*l).clone(), i as u32))
                    .collect();
                let encoded = values
                    .iter()
                    .map(|v| v.as_ref().map(|s| f64::from(codes[s])))
                    .collect();
                map.columns.insert(col.name.clone(), codes);
                Column {
                    name: col.name.clone(),
                    kind: col.kind,
                    origin: col.origin.clone(),
                    cells: Cells::Numeric(encoded),
                }
            }
        })
        .collect();
    (
        Dataset {
            columns,
            ..ds.clone()
        },
        map,
    )
}
