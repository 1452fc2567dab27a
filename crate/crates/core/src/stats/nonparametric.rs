use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    Exact,
    NormalApprox,
    ChiSquareApprox,
}

impl TestMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApprox => "normal",
            TestMethod::ChiSquareApprox => "chi-square",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n: Vec<usize>,
}

/// Average (mid) ranks starting at 1, plus the sizes of tied groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum()
}

fn normal_two_sided(stat: f64, mean: f64, var: f64) -> f64 {
    if !(var > 0.0) {
        return 1.0;
    }
    let dev = ((stat - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let nd = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * nd.sf(z)).min(1.0)
}

/// Number of arrangements giving each U = 0..=m*n for samples of size m and n.
fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // f[i][j] is the distribution for sizes (i, j); rolled over i.
    let max = m * n;
    let mut prev: Vec<Vec<f64>> = (0..=n).map(|_| {
        let mut v = vec![0.0; max + 1];
        v[0] = 1.0;
        v
    }).collect();
    for _ in 1..=m {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut base = vec![0.0; max + 1];
        base[0] = 1.0;
        cur.push(base);
        for j in 1..=n {
            let mut v = vec![0.0; max + 1];
            // Largest value belongs to the first sample (adds j to U) or to the second.
            for u in 0..=max {
                let from_i = if u >= j { prev[j][u - j] } else { 0.0 };
                v[u] = from_i + cur[j - 1][u];
            }
            cur.push(v);
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

/// Two-sided Mann-Whitney U test; the statistic is U of the first sample.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Stats("Mann-Whitney U needs two non-empty samples".to_string()));
    }
    let (na, nb) = (a.len(), b.len());
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&all);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;
    let n = (na + nb) as f64;
    let (p, method) = if ties.is_empty() && na + nb <= 30 {
        let dist = u_distribution(na, nb);
        let total: f64 = dist.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = dist[..=k].iter().sum::<f64>() / total;
        let upper: f64 = dist[k..].iter().sum::<f64>() / total;
        ((2.0 * lower.min(upper)).min(1.0), TestMethod::Exact)
    } else {
        let mean = (na * nb) as f64 / 2.0;
        let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_sum(&ties) / (n * (n - 1.0)));
        (normal_two_sided(u, mean, var), TestMethod::NormalApprox)
    };
    Ok(TestResult {
        test: "mann_whitney_u".to_string(),
        statistic: u,
        p_value: p,
        method,
        n: vec![na, nb],
    })
}

/// Counts of subsets of {1..n} for each sum 0..=n(n+1)/2.
fn signed_rank_distribution(n: usize) -> Vec<f64> {
    let max = n * (n + 1) / 2;
    let mut c = vec![0.0; max + 1];
    c[0] = 1.0;
    for r in 1..=n {
        for s in (r..=max).rev() {
            c[s] += c[s - r];
        }
    }
    c
}

/// Two-sided Wilcoxon signed-rank test on paired samples; W = min(W+, W-).
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Stats(format!(
            "Wilcoxon signed-rank needs paired samples, got lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(TestResult {
            test: "wilcoxon_signed_rank".to_string(),
            statistic: 0.0,
            p_value: 1.0,
            method: TestMethod::Exact,
            n: vec![a.len()],
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);
    let (p, method) = if ties.is_empty() && n <= 25 {
        let dist = signed_rank_distribution(n);
        let all: f64 = dist.iter().sum();
        let k = w.round() as usize;
        let lower = dist[..=k].iter().sum::<f64>() / all;
        ((2.0 * lower).min(1.0), TestMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum(&ties) / 48.0;
        (normal_two_sided(w, mean, var), TestMethod::NormalApprox)
    };
    Ok(TestResult {
        test: "wilcoxon_signed_rank".to_string(),
        statistic: w,
        p_value: p,
        method,
        n: vec![n],
    })
}

/// Tie-corrected Kruskal-Wallis H with a chi-square (groups - 1) p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::Stats("Kruskal-Wallis needs at least 2 non-empty groups".to_string()));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let (ranks, ties) = average_ranks(&all);
    let mut offset = 0;
    let mut h = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        h += r * r / g.len() as f64;
        offset += g.len();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_sum(&ties) / (n * n * n - n);
    let (h, p) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let h = (h / correction).max(0.0);
        let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive df");
        (h, chi.sf(h).clamp(0.0, 1.0))
    };
    Ok(TestResult {
        test: "kruskal_wallis".to_string(),
        statistic: h,
        p_value: p,
        method: TestMethod::ChiSquareApprox,
        n: groups.iter().map(Vec::len).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wilcoxon_exact_table_values() {
        let base: Vec<f64> = (1..=10).map(f64::from).collect();
        let a: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let r = wilcoxon_signed_rank(&a, &base).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(close(r.p_value, 0.001953, 1e-6));
        assert_eq!(r.method, TestMethod::Exact);

        // differences 1..10 with ranks {1, 3} negative → W = 4; {5} negative → W = 5
        let mk = |neg: &[usize]| -> Vec<f64> {
            (1..=10).map(|k| if neg.contains(&k) { -(k as f64) } else { k as f64 }).collect()
        };
        let zeros = vec![0.0; 10];
        let w4 = wilcoxon_signed_rank(&mk(&[1, 3]), &zeros).unwrap();
        assert_eq!(w4.statistic, 4.0);
        assert!(close(w4.p_value, 0.013672, 1e-6));
        let w5 = wilcoxon_signed_rank(&mk(&[5]), &zeros).unwrap();
        assert_eq!(w5.statistic, 5.0);
        assert!(close(w5.p_value, 0.019531, 1e-6));
    }

    #[test]
    fn wilcoxon_all_zero_and_mismatch() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap().p_value, 1.0);
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration_for_n10() {
        let dist = signed_rank_distribution(10);
        for w in 0..=27usize {
            let mut count = 0u32;
            for mask in 0u32..1024 {
                let s: usize = (0..10).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).sum();
                if s <= w {
                    count += 1;
                }
            }
            let exact = (2.0 * count as f64 / 1024.0).min(1.0);
            let ours = (2.0 * dist[..=w].iter().sum::<f64>() / 1024.0).min(1.0);
            assert!(close(exact, ours, 1e-15));
        }
    }

    #[test]
    fn mann_whitney_exact_examples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(close(r.p_value, 2.0 / 252.0, 1e-12));
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(close(r.p_value, 2.0 / 3.0, 1e-12));
        let same = mann_whitney_u(&[4.0, 4.0, 4.0], &[4.0, 4.0]).unwrap();
        assert_eq!(same.p_value, 1.0);
        assert_eq!(same.method, TestMethod::NormalApprox);
    }

    fn brute_force_mwu_p(a: &[f64], b: &[f64]) -> f64 {
        let all: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = all.len();
        let u_of = |mask: u32| -> f64 {
            let mut u = 0.0;
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    for j in 0..n {
                        if mask >> j & 1 == 0 && all[i] > all[j] {
                            u += 1.0;
                        }
                    }
                }
            }
            u
        };
        let observed: f64 = a.iter().map(|x| b.iter().filter(|y| x > *y).count() as f64).sum();
        let (mut lo, mut hi, mut total) = (0.0f64, 0.0f64, 0.0f64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != a.len() {
                continue;
            }
            let u = u_of(mask);
            total += 1.0;
            if u <= observed {
                lo += 1.0;
            }
            if u >= observed {
                hi += 1.0;
            }
        }
        (2.0 * (lo / total).min(hi / total)).min(1.0)
    }

    proptest! {
        #[test]
        fn mann_whitney_exact_matches_enumeration(
            vals in proptest::collection::hash_set(0i32..1000, 2..=8),
            split in 1usize..7,
        ) {
            let v: Vec<f64> = vals.into_iter().map(f64::from).collect();
            prop_assume!(split < v.len());
            let (a, b) = v.split_at(split);
            let r = mann_whitney_u(a, b).unwrap();
            prop_assert_eq!(r.method, TestMethod::Exact);
            prop_assert!(close(r.p_value, brute_force_mwu_p(a, b), 1e-12));
        }

        #[test]
        fn p_values_in_unit_interval(a in proptest::collection::vec(0.0f64..10.0, 1..40), b in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            for p in [
                mann_whitney_u(&a, &b).unwrap().p_value,
                kruskal_wallis(&[a.clone(), b.clone()]).unwrap().p_value,
            ] {
                prop_assert!(p > 0.0 && p <= 1.0);
            }
            let m = a.len().min(b.len());
            let w = wilcoxon_signed_rank(&a[..m], &b[..m]).unwrap().p_value;
            prop_assert!(w > 0.0 && w <= 1.0);
        }
    }

    #[test]
    fn kruskal_wallis_examples() {
        let g = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let r = kruskal_wallis(&g).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(close(r.p_value, 1.0, 1e-12));
        let sep: Vec<Vec<f64>> = (0..3).map(|k| (0..5).map(|i| f64::from(k * 5 + i)).collect()).collect();
        let r = kruskal_wallis(&sep).unwrap();
        assert!(close(r.statistic, 12.5, 1e-12));
        assert!(close(r.p_value, 0.00193, 1e-5));
        assert!(kruskal_wallis(&[vec![1.0]]).is_err());
    }

    #[test]
    fn two_group_kruskal_agrees_with_normal_mwu() {
        let a = [1.1, 2.3, 2.9, 4.0, 5.5, 6.1, 7.7, 8.0, 9.2, 10.4, 12.0, 13.3];
        let b = [3.3, 5.0, 6.6, 8.8, 9.9, 11.1, 12.2, 14.4, 15.5, 16.6, 17.7, 18.8, 19.9, 21.0, 22.0, 23.0, 24.0];
        let kw = kruskal_wallis(&[a.to_vec(), b.to_vec()]).unwrap();
        let mw = mann_whitney_u(&a, &b).unwrap();
        assert!(close(kw.p_value, mw.p_value, 0.01), "{} {}", kw.p_value, mw.p_value);
    }
}
