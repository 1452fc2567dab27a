//! Benchmark data generators.
//!
//! [`generate`] is the string-keyed entry point used by the command line;
//! it returns the data together with the fully resolved parameters, which
//! [`write_simulation`] records next to the data file.

mod bits;
mod hcc;
mod penetrance;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{write_delimited, Dataset, DelimitedLayout};
use crate::error::{Error, Result};

pub use bits::{address_bits, gen_multiplexer, gen_xor, multiplexer_output, MULTIPLEXER_SIZES};
pub use hcc::{
    hcc_like_base, hcc_like_custom, hcc_like_replication, BASE_BINARY, BASE_INSTANCES, BASE_POSITIVES,
    BASE_QUANTITATIVE, COVARIATES, REPLICATION_NO_OUTCOME,
};
pub use penetrance::{
    gen_penetrance, genotype_index, hardy_weinberg, Component, PenetranceModel, PenetranceOptions,
};

pub const GENERATORS: [&str; 5] = ["multiplexer", "xor", "penetrance", "hcc_custom", "hcc_replication"];

/// Parses `key=value` pairs separated by commas.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::data(format!("generator parameter '{part}' is not key=value")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

struct Params {
    given: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Params {
    fn get<T: std::str::FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T> {
        let v = match self.given.remove(key) {
            Some(s) => s
                .parse()
                .map_err(|_| Error::data(format!("generator parameter {key}='{s}' is invalid")))?,
            None => default,
        };
        self.resolved.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    fn finish(self) -> Result<Vec<(String, String)>> {
        if let Some(k) = self.given.keys().next() {
            return Err(Error::data(format!("unknown generator parameter '{k}'")));
        }
        Ok(self.resolved)
    }
}

/// Builds a dataset by generator name; unknown parameters are errors.
pub fn generate(generator: &str, params: &BTreeMap<String, String>) -> Result<(Dataset, Vec<(String, String)>)> {
    let mut p = Params {
        given: params.clone(),
        resolved: vec![("generator".to_string(), generator.to_string())],
    };
    let ds = match generator {
        "multiplexer" => {
            let bits = p.get("bits", 6usize)?;
            let n = p.get("instances", 500usize)?;
            let seed = p.get("seed", 42u64)?;
            gen_multiplexer(bits, n, seed)?
        }
        "xor" => {
            let order = p.get("order", 2usize)?;
            let features = p.get("features", 20usize)?;
            let n = p.get("instances", 1600usize)?;
            let seed = p.get("seed", 42u64)?;
            gen_xor(order, features, n, seed)?
        }
        "penetrance" => {
            let model = PenetranceModel::canned(&p.get("model", "univariate".to_string())?)?;
            let opts = PenetranceOptions {
                n_features: p.get("features", 100usize)?,
                n_instances: p.get("instances", 1600usize)?,
                irrelevant_maf: (p.get("maf_min", 0.05f64)?, p.get("maf_max", 0.5f64)?),
            };
            let seed = p.get("seed", 42u64)?;
            p.resolved.push(("heritability".to_string(), format!("{:.6}", model.heritability())));
            gen_penetrance(&model, &opts, seed)?
        }
        "hcc_custom" => hcc_like_custom(p.get("seed", 42u64)?),
        "hcc_replication" => hcc_like_replication(p.get("seed", 42u64)?),
        _ => {
            return Err(Error::data(format!(
                "unknown generator '{generator}' (expected one of {GENERATORS:?})"
            )))
        }
    };
    Ok((ds, p.finish()?))
}

/// Sidecar path for a data file: `data.csv` → `data.params.txt`.
pub fn params_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("params.txt")
}

/// Writes the data as CSV and the parameters as `key=value` lines.
pub fn write_simulation(ds: &Dataset, params: &[(String, String)], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_delimited(ds, file, &DelimitedLayout::new(ds.outcome_name.clone()))?;
    let text: String = params.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    let side = params_path(path);
    fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureKind;

    #[test]
    fn multiplexer_shapes() {
        assert_eq!(address_bits(6).unwrap(), 2);
        assert_eq!(address_bits(135).unwrap(), 7);
        assert!(address_bits(7).is_err());
        let d = gen_multiplexer(6, 50, 1).unwrap();
        assert_eq!(d.feature_names(), vec!["A_0", "A_1", "R_0", "R_1", "R_2", "R_3"]);
        assert_eq!(multiplexer_output(&[0, 0], &[1, 0, 1, 1]), 1);
        assert_eq!(multiplexer_output(&[1, 0], &[1, 0, 0, 1]), 0);
        assert_eq!(multiplexer_output(&[0, 1], &[0, 1, 0, 0]), 1);
        let big = gen_multiplexer(135, 5, 1).unwrap();
        assert_eq!(big.feature_names().iter().filter(|n| n.starts_with("A_")).count(), 7);
        assert_eq!(big.n_features(), 135);
    }

    fn bits(ds: &Dataset, row: usize) -> Vec<u8> {
        ds.columns.iter().map(|c| c.values().unwrap()[row].unwrap() as u8).collect()
    }

    #[test]
    fn outcomes_regenerate_exactly() {
        let m = gen_multiplexer(11, 200, 4).unwrap();
        for r in 0..200 {
            let b = bits(&m, r);
            assert_eq!(Some(multiplexer_output(&b[..3], &b[3..])), m.outcome[r]);
        }
        let x = gen_xor(3, 10, 200, 4).unwrap();
        for r in 0..200 {
            let b = bits(&x, r);
            assert_eq!(Some(b[0] ^ b[1] ^ b[2]), x.outcome[r]);
        }
    }

    #[test]
    fn xor_defaults_and_balance() {
        let (d, params) = generate("xor", &BTreeMap::new()).unwrap();
        assert_eq!((d.n_features(), d.n_instances()), (20, 1600));
        assert!(params.contains(&("order".to_string(), "2".to_string())));
        let (_, ones) = d.class_counts();
        let prevalence = ones as f64 / 1600.0;
        assert!((0.45..=0.55).contains(&prevalence));
        assert!(gen_xor(5, 4, 10, 0).is_err());
        assert_eq!(d.feature_names()[..2], ["M0P0", "M0P1"]);
    }

    #[test]
    fn same_seed_same_data() {
        for g in GENERATORS {
            let params = parse_params("seed=7").unwrap();
            let a = generate(g, &params).unwrap();
            let b = generate(g, &params).unwrap();
            assert_eq!(a, b, "{g}");
        }
        assert!(generate("xor", &parse_params("bogus=1").unwrap()).is_err());
        assert!(generate("nope", &BTreeMap::new()).is_err());
    }

    #[test]
    fn canned_pure_tables_have_flat_margins() {
        for m in [PenetranceModel::epistasis_2way(), PenetranceModel::epistasis_3way(), PenetranceModel::heterogeneous_2way()] {
            m.validate().unwrap();
            for c in 0..m.components.len() {
                for pos in 0..m.components[c].loci.len() {
                    let marg = m.marginal_penetrance(c, pos);
                    assert!((marg[0] - marg[1]).abs() < 1e-12 && (marg[1] - marg[2]).abs() < 1e-12, "{}: {marg:?}", m.name);
                }
            }
        }
        let uni = PenetranceModel::univariate();
        let marg = uni.marginal_penetrance(0, 0);
        assert!(marg[2] > marg[0]);
        for name in ["univariate", "additive", "heterogeneous", "epistasis_2way", "heterogeneous_2way", "epistasis_3way"] {
            let m = PenetranceModel::canned(name).unwrap();
            m.validate().unwrap();
            assert!(m.heritability() > 0.0 && m.heritability() < 1.0, "{name}");
        }
    }

    #[test]
    fn malformed_tables_rejected() {
        let mut m = PenetranceModel::univariate();
        m.components[0].table.pop();
        assert!(gen_penetrance(&m, &PenetranceOptions::default(), 0).is_err());
        let mut m = PenetranceModel::univariate();
        m.mafs[0] = 0.7;
        assert!(m.validate().is_err());
    }

    #[test]
    fn genotypes_follow_hardy_weinberg() {
        let d = gen_penetrance(&PenetranceModel::univariate(), &PenetranceOptions::default(), 42).unwrap();
        let g = d.column("M0P0").unwrap().values().unwrap();
        let mut counts = [0.0; 3];
        for v in g {
            counts[v.unwrap() as usize] += 1.0;
        }
        let expected = hardy_weinberg(0.2).map(|f| f * 1600.0);
        let chi: f64 = counts.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p = ChiSquared::new(2.0).unwrap().sf(chi);
        assert!(p > 0.01, "p = {p}");
        // Irrelevant features carry their own MAFs in range.
        for c in &d.columns[1..] {
            assert_eq!(c.kind, FeatureKind::Quantitative);
        }
    }

    #[test]
    fn hcc_custom_shape() {
        let d = hcc_like_custom(42);
        assert_eq!(d.n_instances(), BASE_INSTANCES + 4);
        assert_eq!(d.n_features(), 49 + 6 + 3 + 6 + 3);
        assert_eq!(d.outcome.iter().filter(|y| y.is_none()).count(), 2);
        let base = hcc_like_base(42);
        assert_eq!(base.class_counts(), (BASE_INSTANCES - BASE_POSITIVES, BASE_POSITIVES));
        let frac = base.columns.iter().map(|c| c.missing_count()).sum::<usize>() as f64
            / (base.n_features() * base.n_instances()) as f64;
        assert!((0.07..0.13).contains(&frac));
        let rep = hcc_like_replication(42);
        assert_eq!(rep.outcome.iter().filter(|y| y.is_none()).count(), REPLICATION_NO_OUTCOME);
        assert_eq!(rep.feature_names(), d.feature_names());
    }

    #[test]
    fn sidecar_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim/mux.csv");
        let (d, params) = generate("multiplexer", &parse_params("bits=6, instances=20").unwrap()).unwrap();
        write_simulation(&d, &params, &path).unwrap();
        let side = fs::read_to_string(params_path(&path)).unwrap();
        assert!(side.contains("bits=6\n") && side.contains("instances=20\n") && side.contains("seed=42\n"));
        let back = crate::data::load_delimited(&path, "Class", None, None).unwrap();
        assert_eq!(back.n_instances(), 20);
    }
}
