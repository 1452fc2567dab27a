//! k-fold cross-validation partitioning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Dataset, PartitionMethod};
use crate::error::{Error, Result};

/// Test-fold membership for k folds; each training set is the complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvSplit {
    n: usize,
    folds: Vec<Vec<usize>>,
}

impl CvSplit {
    /// Build from a per-instance fold assignment.
    pub fn from_assignment(assignment: &[usize], k: usize) -> Result<CvSplit> {
        let mut folds = vec![Vec::new(); k];
        for (i, &f) in assignment.iter().enumerate() {
            if f >= k {
                return Err(Error::data(format!("fold index {f} out of range for k = {k}")));
            }
            folds[f].push(i);
        }
        Ok(CvSplit {
            n: assignment.len(),
            folds,
        })
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn n_instances(&self) -> usize {
        self.n
    }

    /// Test indices of fold `i`, ascending.
    pub fn test(&self, i: usize) -> &[usize] {
        &self.folds[i]
    }

    /// Training indices of fold `i`, ascending.
    pub fn train(&self, i: usize) -> Vec<usize> {
        let mut is_test = vec![false; self.n];
        for &t in &self.folds[i] {
            is_test[t] = true;
        }
        (0..self.n).filter(|&j| !is_test[j]).collect()
    }

    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (f, idx) in self.folds.iter().enumerate() {
            for &i in idx {
                out[i] = f;
            }
        }
        out
    }
}

fn deal(groups: &[Vec<usize>], k: usize, n: usize) -> CvSplit {
    // Dealing continues across groups so fold sizes stay within one of each other.
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for g in groups {
        for &i in g {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    CvSplit { n, folds }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::data(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::data(format!("cannot make {k} folds from {n} instances")));
    }
    Ok(())
}

/// Shuffle within each class, then deal round-robin.
pub fn stratified_folds<R: Rng>(labels: &[u8], k: usize, rng: &mut R) -> Result<CvSplit> {
    check_k(k, labels.len())?;
    let mut classes = vec![Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[usize::from(y.min(1))].push(i);
    }
    for c in &mut classes {
        c.shuffle(rng);
    }
    Ok(deal(&classes, k, labels.len()))
}

pub fn random_folds<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CvSplit> {
    check_k(k, n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    Ok(deal(&[idx], k, n))
}

/// Shuffle distinct groups and deal whole groups round-robin.
pub fn group_folds<R: Rng>(groups: &[String], k: usize, rng: &mut R) -> Result<CvSplit> {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    if k < 2 || k > members.len() {
        return Err(Error::data(format!(
            "cannot make {k} group folds from {} distinct groups",
            members.len()
        )));
    }
    let mut order: Vec<Vec<usize>> = members.into_values().collect();
    order.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (j, g) in order.into_iter().enumerate() {
        folds[j % k].extend(g);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(CvSplit {
        n: groups.len(),
        folds,
    })
}

pub fn make_folds<R: Rng>(ds: &Dataset, method: PartitionMethod, k: usize, rng: &mut R) -> Result<CvSplit> {
    match method {
        PartitionMethod::Stratified => stratified_folds(&ds.labels()?, k, rng),
        PartitionMethod::Random => random_folds(ds.n_instances(), k, rng),
        PartitionMethod::Group => {
            let g = ds
                .group_labels
                .as_ref()
                .ok_or_else(|| Error::data("group partitioning requires match labels"))?;
            group_folds(g, k, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn per_class_counts(split: &CvSplit, labels: &[u8]) -> Vec<[usize; 2]> {
        (0..split.k())
            .map(|f| {
                let mut c = [0, 0];
                for &i in split.test(f) {
                    c[labels[i] as usize] += 1;
                }
                c
            })
            .collect()
    }

    fn covers_disjointly(split: &CvSplit) -> bool {
        let mut seen = vec![0; split.n_instances()];
        for f in 0..split.k() {
            for &i in split.test(f) {
                seen[i] += 1;
            }
        }
        seen.iter().all(|&s| s == 1)
    }

    #[test]
    fn ten_folds_on_forty_and_sixty_three() {
        let labels: Vec<u8> = (0..103).map(|i| u8::from(i >= 40)).collect();
        let split = stratified_folds(&labels, 10, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        for c in per_class_counts(&split, &labels) {
            assert_eq!(c[0], 4);
            assert!(c[1] == 6 || c[1] == 7);
        }
    }

    #[test]
    fn groups_stay_together() {
        let g: Vec<String> = ["A", "A", "B", "B", "C", "C"].iter().map(|s| s.to_string()).collect();
        let split = group_folds(&g, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let a = split.assignment();
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_eq!(a[4], a[5]);
        assert!(covers_disjointly(&split));
        assert!(group_folds(&g, 4, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn too_many_folds() {
        assert!(random_folds(3, 4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn seeds_matter() {
        let a = random_folds(40, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_folds(40, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let c = random_folds(40, 5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn train_is_complement() {
        let split = random_folds(10, 3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut all = split.train(1);
        all.extend_from_slice(split.test(1));
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn stratified_balance(n in 4usize..300, ratio in 0.05f64..0.95, k in 2usize..12, seed in 0u64..1000) {
            prop_assume!(k <= n);
            let labels: Vec<u8> = (0..n).map(|i| u8::from((i as f64) < ratio * n as f64)).collect();
            let split = stratified_folds(&labels, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(covers_disjointly(&split));
            let counts = per_class_counts(&split, &labels);
            for c in 0..2 {
                let max = counts.iter().map(|x| x[c]).max().unwrap();
                let min = counts.iter().map(|x| x[c]).min().unwrap();
                prop_assert!(max - min <= 1);
            }
        }
    }
}
