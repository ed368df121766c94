//! Paired Wilcoxon signed-rank test.
//!
//! Zero differences are dropped. With `n <= 12` non-zero differences the p-value comes
//! from the exact null distribution of `T+` (all `2^n` sign assignments, counted by
//! dynamic programming over doubled average ranks); above that, a normal approximation
//! with tie-corrected variance and continuity correction is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample size evaluated exactly.
pub const EXACT_MAX_N: usize = 12;
pub const MIN_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `a` tends to exceed `b`.
    Greater,
    /// `a` tends to fall below `b`.
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Non-zero differences used.
    pub n: usize,
    /// Sum of ranks of positive differences `a - b`.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Average ranks of `values` (1-based), doubled so ties stay integral.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1) + (j+1)) / 2
        let doubled = (i + 1 + j + 1) as u64;
        for &o in &order[i..=j] {
            ranks[o] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided test of `a` against `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, Alternative::TwoSided)
}

pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Validation("samples must be finite".into()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|&d| d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n: 0,
            statistic: 0.0,
            p_value: 1.0,
            exact: true,
        });
    }
    if n < MIN_N {
        return Err(Error::Validation(format!(
            "need at least {MIN_N} non-zero differences, got {n}"
        )));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let t2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let statistic = t2 as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let p_value = exact_p(&ranks, t2, alternative);
        return Ok(WilcoxonResult {
            n,
            statistic,
            p_value,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let dev = statistic - mean;
    let p_value = match alternative {
        Alternative::TwoSided => {
            let z = ((dev.abs() - 0.5).max(0.0)) / sd;
            (2.0 * normal.sf(z)).min(1.0)
        }
        Alternative::Greater => normal.sf((dev - 0.5) / sd),
        Alternative::Less => normal.cdf((dev + 0.5) / sd),
    };
    Ok(WilcoxonResult {
        n,
        statistic,
        p_value,
        exact: false,
    })
}

/// Exact p-value from the null distribution of the doubled statistic.
fn exact_p(ranks: &[u64], t2: u64, alternative: Alternative) -> f64 {
    let total: u64 = ranks.iter().sum();
    // counts[s] = number of sign assignments whose positive doubled ranks sum to s
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for &r in ranks {
        let r = r as usize;
        for s in (r..counts.len()).rev() {
            counts[s] += counts[s - r];
        }
    }
    let outcomes = 1u64 << ranks.len();
    let hits: u64 = match alternative {
        Alternative::TwoSided => {
            let dev = (2 * t2).abs_diff(total);
            counts
                .iter()
                .enumerate()
                .filter(|(s, _)| (2 * *s as u64).abs_diff(total) >= dev)
                .map(|(_, c)| c)
                .sum()
        }
        Alternative::Greater => counts[t2 as usize..].iter().sum(),
        Alternative::Less => counts[..=t2 as usize].iter().sum(),
    };
    hits as f64 / outcomes as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.n, 0);
    }

    #[test]
    fn five_positive_differences() {
        let a = [2.0, 3.0, 4.5, 6.0, 9.0];
        let b = [1.0, 1.0, 1.0, 1.0, 1.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(r.exact);
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 0.0625);
        let g = wilcoxon_signed_rank_with(&a, &b, Alternative::Greater).unwrap();
        assert_eq!(g.p_value, 1.0 / 32.0);
        let l = wilcoxon_signed_rank_with(&a, &b, Alternative::Less).unwrap();
        assert_eq!(l.p_value, 1.0);
    }

    #[test]
    fn too_few_or_mismatched() {
        assert!(wilcoxon_signed_rank(&[1.0, 2.0], &[0.0]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn doubled_ranks_average_ties() {
        assert_eq!(doubled_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }
}
