//! Feature importance before modeling and collective feature selection.

mod mi;
mod multisurf;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mi::{discrete_mi, mutual_information, quantile_bins, MAX_BINS};
pub use multisurf::{choose_targets, multisurf, multisurf_with_targets, turf, TurfScores};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiAlgorithm {
    MutualInformation,
    MultiSurf,
}

impl FiAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            FiAlgorithm::MutualInformation => "mutual_information",
            FiAlgorithm::MultiSurf => "multisurf",
        }
    }
}

impl fmt::Display for FiAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FiAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mutual_information" => Ok(FiAlgorithm::MutualInformation),
            "multisurf" => Ok(FiAlgorithm::MultiSurf),
            _ => Err(Error::data(format!("unknown importance algorithm '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiScores {
    pub algorithm: FiAlgorithm,
    pub fold: Option<usize>,
    pub features: Vec<String>,
    pub scores: Vec<f64>,
}

impl FiScores {
    pub fn new(algorithm: FiAlgorithm, fold: Option<usize>, features: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if features.len() != scores.len() {
            return Err(Error::data("one importance score per feature is required"));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::data(format!("non-finite importance score for '{}'", features[i])));
        }
        Ok(FiScores {
            algorithm,
            fold,
            features,
            scores,
        })
    }

    /// Feature indices from highest to lowest score; ties keep column order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }

    /// `rank, feature, score` rows in ranking order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "feature", "score"])?;
        for (r, &i) in self.ranking().iter().enumerate() {
            w.write_record([(r + 1).to_string(), self.features[i].clone(), format!("{}", self.scores[i])])?;
        }
        w.flush().map_err(|e| Error::io("importance table", e))?;
        Ok(())
    }

    /// Reads a table from [`FiScores::write_csv`]; features come back in
    /// the order of `features`.
    pub fn read_csv<R: Read>(
        reader: R,
        algorithm: FiAlgorithm,
        fold: Option<usize>,
        features: &[String],
    ) -> Result<FiScores> {
        let mut r = csv::Reader::from_reader(reader);
        let mut by_name = std::collections::HashMap::new();
        for rec in r.records() {
            let rec = rec?;
            let score: f64 = rec[2]
                .parse()
                .map_err(|_| Error::data(format!("bad importance score '{}'", &rec[2])))?;
            by_name.insert(rec[1].to_string(), score);
        }
        let scores = features
            .iter()
            .map(|f| by_name.get(f).copied().ok_or_else(|| Error::UnknownFeature(f.clone())))
            .collect::<Result<Vec<_>>>()?;
        FiScores::new(algorithm, fold, features.to_vec(), scores)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Kept features in original column order.
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

/// Drops features scoring at most 0 under both algorithms (when
/// `filter_poor_features`), then caps the survivors at `max_features` by
/// alternating between the two rankings.
pub fn collective_select(mi: &FiScores, ms: &FiScores, filter_poor_features: bool, max_features: usize) -> Result<Selection> {
    if mi.features != ms.features {
        return Err(Error::data("importance score vectors cover different features"));
    }
    let p = mi.features.len();
    let mut alive: Vec<bool> = (0..p)
        .map(|f| !filter_poor_features || mi.scores[f] > 0.0 || ms.scores[f] > 0.0)
        .collect();
    let survivors = alive.iter().filter(|a| **a).count();
    if survivors > max_features {
        let rankings = [mi.ranking(), ms.ranking()];
        let mut pos = [0usize; 2];
        let mut taken = vec![false; p];
        let mut count = 0;
        let mut turn = 0;
        while count < max_features {
            let rank = &rankings[turn];
            while pos[turn] < p && (!alive[rank[pos[turn]]] || taken[rank[pos[turn]]]) {
                pos[turn] += 1;
            }
            if pos[turn] < p {
                taken[rank[pos[turn]]] = true;
                count += 1;
            }
            turn = 1 - turn;
        }
        alive = taken;
    }
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (f, name) in mi.features.iter().enumerate() {
        if alive[f] {
            kept.push(name.clone());
        } else {
            dropped.push(name.clone());
        }
    }
    Ok(Selection { kept, dropped })
}
