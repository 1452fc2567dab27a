//! CART trees on rank-coded features, shared by the tree ensembles.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::value_key;

/// Training matrix re-expressed as per-feature ranks of distinct values.
pub(crate) struct Binned {
    codes: Vec<Vec<u32>>,
    levels: Vec<Vec<f64>>,
}

impl Binned {
    pub(crate) fn new(x: &Array2<f64>) -> Self {
        let mut codes = Vec::with_capacity(x.ncols());
        let mut levels = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mut lv: Vec<f64> = col.iter().copied().collect();
            lv.sort_by(f64::total_cmp);
            lv.dedup_by(|a, b| value_key(*a) == value_key(*b));
            let c = col
                .iter()
                .map(|v| lv.partition_point(|l| l < v) as u32)
                .collect();
            codes.push(c);
            levels.push(lv);
        }
        Binned { codes, levels }
    }

    fn n_features(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Node {
    /// `usize::MAX` marks a leaf.
    feature: usize,
    threshold: f64,
    left: usize,
    right: usize,
    value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Default)]
struct Acc {
    n: f64,
    s: f64,
    s2: f64,
}

impl Acc {
    fn add(&mut self, t: f64) {
        self.n += 1.0;
        self.s += t;
        self.s2 += t * t;
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.s += o.s;
        self.s2 += o.s2;
    }

    fn minus(&self, o: &Acc) -> Acc {
        Acc {
            n: self.n - o.n,
            s: self.s - o.s,
            s2: self.s2 - o.s2,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Criterion {
    Gini,
    Mse,
}

impl Criterion {
    /// Quantity to maximise over the two children (parent term omitted).
    fn proxy(self, a: &Acc) -> f64 {
        match self {
            Criterion::Gini => ((a.n - a.s).powi(2) + a.s * a.s) / a.n,
            Criterion::Mse => a.s * a.s / a.n,
        }
    }

    fn pure(self, a: &Acc) -> bool {
        match self {
            Criterion::Gini => a.s == 0.0 || a.s == a.n,
            Criterion::Mse => a.s2 / a.n - (a.s / a.n).powi(2) <= 1e-14,
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    proxy: f64,
}

struct Builder<'a, R> {
    binned: &'a Binned,
    target: &'a [f64],
    hess: Option<&'a [f64]>,
    criterion: Criterion,
    params: TreeParams,
    rng: Option<&'a mut R>,
    scratch: Vec<Acc>,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf_value(&self, rows: &[usize], acc: &Acc) -> f64 {
        match (self.criterion, self.hess) {
            (Criterion::Mse, Some(h)) => {
                let hs: f64 = rows.iter().map(|&r| h[r]).sum();
                acc.s / hs.max(1e-12)
            }
            _ => acc.s / acc.n,
        }
    }

    /// Non-empty codes of `feature` among `rows`, ascending, with their target sums.
    fn code_stats(&mut self, feature: usize, rows: &[usize]) -> Vec<(u32, Acc)> {
        let codes = &self.binned.codes[feature];
        let n_levels = self.binned.levels[feature].len();
        if n_levels <= 2 * rows.len() {
            if self.scratch.len() < n_levels {
                self.scratch.resize(n_levels, Acc::default());
            }
            for &r in rows {
                self.scratch[codes[r] as usize].add(self.target[r]);
            }
            let mut out = Vec::new();
            for (c, a) in self.scratch[..n_levels].iter_mut().enumerate() {
                if a.n > 0.0 {
                    out.push((c as u32, *a));
                    *a = Acc::default();
                }
            }
            out
        } else {
            let mut pairs: Vec<(u32, f64)> = rows.iter().map(|&r| (codes[r], self.target[r])).collect();
            pairs.sort_by_key(|p| p.0);
            let mut out: Vec<(u32, Acc)> = Vec::new();
            for (c, t) in pairs {
                match out.last_mut() {
                    Some((lc, a)) if *lc == c => a.add(t),
                    _ => {
                        let mut a = Acc::default();
                        a.add(t);
                        out.push((c, a));
                    }
                }
            }
            out
        }
    }

    fn best_for_feature(&mut self, feature: usize, rows: &[usize], total: &Acc) -> Option<Split> {
        let stats = self.code_stats(feature, rows);
        if stats.len() < 2 {
            return None;
        }
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;
        let levels = &self.binned.levels[feature];
        let mut left = Acc::default();
        let mut best: Option<Split> = None;
        for w in 0..stats.len() - 1 {
            left.merge(&stats[w].1);
            let right = total.minus(&left);
            if left.n < min_leaf || right.n < min_leaf {
                continue;
            }
            let proxy = self.criterion.proxy(&left) + self.criterion.proxy(&right);
            if best.as_ref().is_none_or(|b| proxy > b.proxy) {
                let lo = levels[stats[w].0 as usize];
                let hi = levels[stats[w + 1].0 as usize];
                let mut threshold = (lo + hi) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature,
                    threshold,
                    proxy,
                });
            }
        }
        best
    }

    fn candidate_features(&mut self, rows: &[usize]) -> Vec<usize> {
        let p = self.binned.n_features();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut perm: Vec<usize> = (0..p).collect();
                perm.shuffle(rng);
                // Features constant within the node do not count towards m.
                let mut chosen: Vec<usize> = Vec::with_capacity(m);
                for f in perm {
                    if chosen.len() == m {
                        break;
                    }
                    let codes = &self.binned.codes[f];
                    let first = codes[rows[0]];
                    if rows.iter().any(|&r| codes[r] != first) {
                        chosen.push(f);
                    }
                }
                chosen.sort_unstable();
                chosen
            }
            _ => (0..p).collect(),
        }
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut total = Acc::default();
        for &r in &rows {
            total.add(self.target[r]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            feature: usize::MAX,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: self.leaf_value(&rows, &total),
        });
        let n = rows.len();
        if depth >= self.params.max_depth
            || n < self.params.min_samples_split.max(2)
            || n < 2 * self.params.min_samples_leaf.max(1)
            || self.criterion.pure(&total)
        {
            return id;
        }
        let mut best: Option<Split> = None;
        for f in self.candidate_features(&rows) {
            if let Some(s) = self.best_for_feature(f, &rows, &total) {
                if best.as_ref().is_none_or(|b| s.proxy > b.proxy) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else { return id };
        let codes = &self.binned.codes[split.feature];
        let levels = &self.binned.levels[split.feature];
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| levels[codes[row] as usize] <= split.threshold);
        drop(rows);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        let node = &mut self.nodes[id];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        id
    }
}

impl Tree {
    /// Gini-impurity classification tree; leaves hold the class-1 fraction.
    pub(crate) fn fit_classifier<R: Rng>(
        binned: &Binned,
        y: &[f64],
        rows: Vec<usize>,
        params: TreeParams,
        rng: Option<&mut R>,
    ) -> Tree {
        let mut b = Builder {
            binned,
            target: y,
            hess: None,
            criterion: Criterion::Gini,
            params,
            rng,
            scratch: Vec::new(),
            nodes: Vec::new(),
        };
        b.build(rows, 0);
        Tree { nodes: b.nodes }
    }

    /// Squared-error regression tree on `grad`; leaves hold sum(grad)/sum(hess).
    pub(crate) fn fit_regressor(
        binned: &Binned,
        grad: &[f64],
        hess: &[f64],
        rows: Vec<usize>,
        params: TreeParams,
    ) -> Tree {
        let mut b: Builder<'_, rand_chacha::ChaCha8Rng> = Builder {
            binned,
            target: grad,
            hess: Some(hess),
            criterion: Criterion::Mse,
            params,
            rng: None,
            scratch: Vec::new(),
            nodes: Vec::new(),
        };
        b.build(rows, 0);
        Tree { nodes: b.nodes }
    }

    pub fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == usize::MAX {
                return node.value;
            }
            i = if x[node.feature] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.feature == usize::MAX {
                0
            } else {
                1 + walk(t, n.left).max(walk(t, n.right))
            }
        }
        walk(self, 0)
    }
}
