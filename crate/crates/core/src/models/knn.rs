use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KNearestNeighbors {
    k: usize,
    weights: KnnWeights,
    n_features: usize,
    x: Vec<f64>,
    y: Vec<u8>,
}

impl KNearestNeighbors {
    pub(crate) fn fit(x: &Array2<f64>, y: &[u8], k: usize, weights: KnnWeights) -> Self {
        KNearestNeighbors {
            k: k.clamp(1, y.len()),
            weights,
            n_features: x.ncols(),
            x: x.iter().copied().collect(),
            y: y.to_vec(),
        }
    }

    /// Class-1 share among the k nearest training points (Euclidean);
    /// equal distances are resolved in favour of the lower training index.
    pub(crate) fn predict_row(&self, q: ArrayView1<'_, f64>) -> f64 {
        let p = self.n_features;
        let mut d: Vec<(f64, usize)> = self
            .x
            .chunks_exact(p.max(1))
            .take(self.y.len())
            .enumerate()
            .map(|(i, row)| {
                let s: f64 = row.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        match self.weights {
            KnnWeights::Uniform => {
                d.iter().filter(|&&(_, i)| self.y[i] == 1).count() as f64 / d.len() as f64
            }
            KnnWeights::Distance => {
                if d.iter().any(|&(s, _)| s == 0.0) {
                    let exact: Vec<_> = d.iter().filter(|&&(s, _)| s == 0.0).collect();
                    return exact.iter().filter(|&&&(_, i)| self.y[i] == 1).count() as f64 / exact.len() as f64;
                }
                let (mut num, mut den) = (0.0, 0.0);
                for &(s, i) in &d {
                    let w = 1.0 / s.sqrt();
                    den += w;
                    if self.y[i] == 1 {
                        num += w;
                    }
                }
                num / den
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn ties_prefer_lower_index() {
        let x = array![[1.0], [-1.0], [3.0]];
        let m = KNearestNeighbors::fit(&x, &[1, 0, 0], 1, KnnWeights::Uniform);
        assert_eq!(m.predict_row(array![0.0].view()), 1.0);
        let m = KNearestNeighbors::fit(&x, &[0, 1, 0], 1, KnnWeights::Uniform);
        assert_eq!(m.predict_row(array![0.0].view()), 0.0);
    }

    #[test]
    fn distance_weighting() {
        let x = array![[0.0], [3.0]];
        let m = KNearestNeighbors::fit(&x, &[1, 0], 2, KnnWeights::Distance);
        assert!((m.predict_row(array![1.0].view()) - (1.0 / (1.0 + 0.5))).abs() < 1e-12);
        assert_eq!(m.predict_row(array![3.0].view()), 0.0);
    }

    #[test]
    fn k_is_clamped_to_training_size() {
        let x = array![[0.0], [1.0]];
        let m = KNearestNeighbors::fit(&x, &[1, 0], 10, KnnWeights::Uniform);
        assert_eq!(m.predict_row(array![0.2].view()), 0.5);
    }
}
