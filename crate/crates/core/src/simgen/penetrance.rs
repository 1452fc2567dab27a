use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bits::instance_ids;
use crate::data::{Column, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Penetrance over a subset of the relevant loci. `table` is indexed by
/// genotypes (minor-allele counts) in base 3, first locus most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub loci: Vec<usize>,
    pub table: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenetranceModel {
    pub name: String,
    /// Minor allele frequency of each relevant locus.
    pub mafs: Vec<f64>,
    /// Each instance follows exactly one component, drawn by weight.
    pub components: Vec<Component>,
}

pub fn genotype_index(genotypes: &[u8]) -> usize {
    genotypes.iter().fold(0, |acc, &g| acc * 3 + usize::from(g))
}

/// Hardy-Weinberg genotype frequencies (0, 1, 2 minor alleles).
pub fn hardy_weinberg(maf: f64) -> [f64; 3] {
    [(1.0 - maf).powi(2), 2.0 * maf * (1.0 - maf), maf * maf]
}

fn outer(u: &[f64; 3], order: usize, base: f64, delta: f64) -> Vec<f64> {
    (0..3usize.pow(order as u32))
        .map(|mut idx| {
            let mut prod = 1.0;
            for _ in 0..order {
                prod *= u[idx % 3];
                idx /= 3;
            }
            base + delta * prod
        })
        .collect()
}

/// Zero-mean genotype contrast under MAF 0.2, so products of it have flat margins.
const PURE_CONTRAST: [f64; 3] = [1.0, -2.0, 0.0];

impl PenetranceModel {
    pub fn validate(&self) -> Result<()> {
        if self.mafs.iter().any(|&q| !(q > 0.0 && q <= 0.5)) {
            return Err(Error::data("minor allele frequencies must lie in (0, 0.5]"));
        }
        if self.components.is_empty() {
            return Err(Error::data("penetrance model has no components"));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.components.iter().any(|c| c.weight < 0.0) {
            return Err(Error::data("component weights must be non-negative and sum to 1"));
        }
        for c in &self.components {
            if c.table.len() != 3usize.pow(c.loci.len() as u32) {
                return Err(Error::data(format!(
                    "penetrance table has {} entries, expected 3^{}",
                    c.table.len(),
                    c.loci.len()
                )));
            }
            if c.loci.iter().any(|&l| l >= self.mafs.len()) {
                return Err(Error::data("component refers to an unknown locus"));
            }
            if c.table.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::data("penetrance values must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn single(name: &str, mafs: Vec<f64>, table: Vec<f64>) -> PenetranceModel {
        let loci = (0..mafs.len()).collect();
        PenetranceModel {
            name: name.to_string(),
            mafs,
            components: vec![Component { loci, table, weight: 1.0 }],
        }
    }

    pub fn univariate() -> PenetranceModel {
        Self::single("univariate", vec![0.2], vec![0.2, 0.7, 0.9])
    }

    /// Four loci whose minor alleles each add the same risk.
    pub fn additive() -> PenetranceModel {
        let table = (0..81)
            .map(|mut idx| {
                let mut alleles = 0;
                for _ in 0..4 {
                    alleles += idx % 3;
                    idx /= 3;
                }
                0.2 + 0.075 * alleles as f64
            })
            .collect();
        Self::single("additive", vec![0.2; 4], table)
    }

    /// Four univariate effects, each active in a quarter of instances.
    pub fn heterogeneous() -> PenetranceModel {
        PenetranceModel {
            name: "heterogeneous".to_string(),
            mafs: vec![0.2; 4],
            components: (0..4)
                .map(|l| Component {
                    loci: vec![l],
                    table: vec![0.2, 0.7, 0.9],
                    weight: 0.25,
                })
                .collect(),
        }
    }

    pub fn epistasis_2way() -> PenetranceModel {
        Self::single("epistasis_2way", vec![0.2; 2], outer(&PURE_CONTRAST, 2, 0.5, 0.1))
    }

    /// Two independent pure 2-way interactions, each in half the instances.
    pub fn heterogeneous_2way() -> PenetranceModel {
        let table = outer(&PURE_CONTRAST, 2, 0.5, 0.1);
        PenetranceModel {
            name: "heterogeneous_2way".to_string(),
            mafs: vec![0.2; 4],
            components: vec![
                Component {
                    loci: vec![0, 1],
                    table: table.clone(),
                    weight: 0.5,
                },
                Component {
                    loci: vec![2, 3],
                    table,
                    weight: 0.5,
                },
            ],
        }
    }

    pub fn epistasis_3way() -> PenetranceModel {
        Self::single("epistasis_3way", vec![0.2; 3], outer(&PURE_CONTRAST, 3, 0.5, 0.06))
    }

    pub fn canned(name: &str) -> Result<PenetranceModel> {
        match name {
            "univariate" => Ok(Self::univariate()),
            "additive" => Ok(Self::additive()),
            "heterogeneous" => Ok(Self::heterogeneous()),
            "epistasis_2way" => Ok(Self::epistasis_2way()),
            "heterogeneous_2way" => Ok(Self::heterogeneous_2way()),
            "epistasis_3way" => Ok(Self::epistasis_3way()),
            _ => Err(Error::data(format!("unknown penetrance model '{name}'"))),
        }
    }

    /// Expected penetrance of each genotype of `locus` given its neighbours
    /// at Hardy-Weinberg frequencies, for the component's table.
    pub fn marginal_penetrance(&self, component: usize, position: usize) -> [f64; 3] {
        let c = &self.components[component];
        let freqs: Vec<[f64; 3]> = c.loci.iter().map(|&l| hardy_weinberg(self.mafs[l])).collect();
        let k = c.loci.len();
        let mut num = [0.0; 3];
        let mut den = [0.0; 3];
        for (idx, &p) in c.table.iter().enumerate() {
            let mut g = vec![0usize; k];
            let mut rest = idx;
            for slot in (0..k).rev() {
                g[slot] = rest % 3;
                rest /= 3;
            }
            let w: f64 = (0..k).filter(|&s| s != position).map(|s| freqs[s][g[s]]).product();
            num[g[position]] += w * p;
            den[g[position]] += w;
        }
        [num[0] / den[0], num[1] / den[1], num[2] / den[2]]
    }

    /// Variance of penetrance over genotypes divided by the outcome variance.
    pub fn heritability(&self) -> f64 {
        let mut mean = 0.0;
        let mut second = 0.0;
        for c in &self.components {
            let freqs: Vec<[f64; 3]> = c.loci.iter().map(|&l| hardy_weinberg(self.mafs[l])).collect();
            for (idx, &p) in c.table.iter().enumerate() {
                let mut rest = idx;
                let mut w = c.weight;
                for slot in (0..c.loci.len()).rev() {
                    w *= freqs[slot][rest % 3];
                    rest /= 3;
                }
                mean += w * p;
                second += w * p * p;
            }
        }
        let var_p = second - mean * mean;
        let var_y = mean * (1.0 - mean);
        if var_y > 0.0 {
            var_p / var_y
        } else {
            0.0
        }
    }
}

fn draw_genotype<R: Rng>(rng: &mut R, maf: f64) -> u8 {
    u8::from(rng.random_bool(maf)) + u8::from(rng.random_bool(maf))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenetranceOptions {
    pub n_features: usize,
    pub n_instances: usize,
    pub irrelevant_maf: (f64, f64),
}

impl Default for PenetranceOptions {
    fn default() -> Self {
        PenetranceOptions {
            n_features: 100,
            n_instances: 1600,
            irrelevant_maf: (0.05, 0.5),
        }
    }
}

/// Relevant loci come first as `M0P0..`, irrelevant ones follow as `N0..`.
pub fn gen_penetrance(model: &PenetranceModel, opts: &PenetranceOptions, seed: u64) -> Result<Dataset> {
    model.validate()?;
    let relevant = model.mafs.len();
    if relevant > opts.n_features {
        return Err(Error::data("more relevant loci than features"));
    }
    let (lo, hi) = opts.irrelevant_maf;
    if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
        return Err(Error::data("irrelevant MAF range must lie in (0, 0.5]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_mafs: Vec<f64> = (relevant..opts.n_features).map(|_| rng.random_range(lo..=hi)).collect();
    let mafs: Vec<f64> = model.mafs.iter().copied().chain(noise_mafs).collect();
    let n = opts.n_instances;
    let mut genotypes = vec![vec![0u8; n]; opts.n_features];
    let mut y = Vec::with_capacity(n);
    let cumulative: Vec<f64> = model
        .components
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    for i in 0..n {
        for (f, &q) in mafs.iter().enumerate() {
            genotypes[f][i] = draw_genotype(&mut rng, q);
        }
        let u: f64 = rng.random();
        let c = &model.components[cumulative.iter().position(|&w| u < w).unwrap_or(cumulative.len() - 1)];
        let g: Vec<u8> = c.loci.iter().map(|&l| genotypes[l][i]).collect();
        let p = c.table[genotype_index(&g)];
        y.push(u8::from(rng.random_bool(p)));
    }
    let columns = genotypes
        .into_iter()
        .enumerate()
        .map(|(f, g)| {
            let name = if f < relevant {
                format!("M0P{f}")
            } else {
                format!("N{}", f - relevant)
            };
            Column::numeric(name, FeatureKind::Quantitative, g.into_iter().map(|v| Some(f64::from(v))).collect())
        })
        .collect();
    Ok(Dataset {
        outcome_name: "Class".to_string(),
        instance_ids: instance_ids(n),
        outcome: y.into_iter().map(Some).collect(),
        columns,
        group_labels: None,
    })
}
