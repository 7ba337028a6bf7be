//! Mann–Whitney U rank-sum test and medians.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    Normal,
    /// Every observation identical; p is 1 by convention.
    Degenerate,
}

/// Which sample tends to hold the smaller values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smaller {
    X,
    Y,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// Pairs `(x_i, y_j)` with `x_i > y_j`, ties counting one half.
    pub u_x: f64,
    pub u_y: f64,
    pub p_value: f64,
    pub method: PMethod,
    pub smaller: Smaller,
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .collect()
}

fn u_statistics(x: &[f64], y: &[f64]) -> (f64, f64) {
    let joined: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&joined);
    let n1 = x.len() as f64;
    let r1: f64 = ranks[..x.len()].iter().sum();
    let u_x = r1 - n1 * (n1 + 1.0) / 2.0;
    (u_x, n1 * y.len() as f64 - u_x)
}

/// Null distribution of U for sample sizes `(n1, n2)` without ties:
/// `counts[u]` arrangements out of `C(n1+n2, n1)`.
fn u_null_counts(n1: usize, n2: usize) -> Vec<f64> {
    // f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u)
    let max_u = n1 * n2;
    let mut table = vec![vec![vec![0.0f64; max_u + 1]; n2 + 1]; n1 + 1];
    for m in 0..=n1 {
        for n in 0..=n2 {
            if m == 0 || n == 0 {
                table[m][n][0] = 1.0;
                continue;
            }
            for u in 0..=m * n {
                let with_x_last = if u >= n { table[m - 1][n][u - n] } else { 0.0 };
                table[m][n][u] = with_x_last + table[m][n - 1][u];
            }
        }
    }
    table[n1][n2].clone()
}

/// Two-sided exact p-value by enumerating the permutation distribution.
/// Only valid without ties.
pub fn exact_p_value(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let (u_x, _) = u_statistics(x, y);
    let counts = u_null_counts(x.len(), y.len());
    let total: f64 = counts.iter().sum();
    let u = u_x.round() as usize;
    let lower: f64 = counts[..=u].iter().sum::<f64>() / total;
    let upper: f64 = counts[u..].iter().sum::<f64>() / total;
    Ok((2.0 * lower.min(upper)).min(1.0))
}

/// Two-sided p-value from the normal approximation with tie-corrected
/// variance and continuity correction.
pub fn normal_p_value(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let (u_x, _) = u_statistics(x, y);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let n = n1 + n2;
    let joined: Vec<f64> = x.iter().chain(y).copied().collect();
    let ties: f64 = tie_groups(&joined)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u_x - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Rank-sum test of `x` against `y`. Exact when `|x|+|y| ≤ 20` and there are
/// no ties, otherwise normal approximation.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let (u_x, u_y) = u_statistics(x, y);
    let smaller = match u_x.partial_cmp(&u_y) {
        Some(std::cmp::Ordering::Less) => Smaller::X,
        Some(std::cmp::Ordering::Greater) => Smaller::Y,
        _ => Smaller::Neither,
    };
    let joined: Vec<f64> = x.iter().chain(y).copied().collect();
    let groups = tie_groups(&joined);
    let (p_value, method) = if groups.len() == 1 {
        (1.0, PMethod::Degenerate)
    } else if joined.len() <= EXACT_LIMIT && groups.iter().all(|&g| g == 1) {
        (exact_p_value(x, y)?, PMethod::Exact)
    } else {
        (normal_p_value(x, y)?, PMethod::Normal)
    };
    Ok(MannWhitney {
        u_x,
        u_y,
        p_value,
        method,
        smaller,
    })
}

/// Median, averaging the middle pair for even lengths.
pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::combinations;
    use proptest::prelude::*;

    /// Two-sided exact p by listing every assignment of ranks to x.
    fn brute_exact(x: &[f64], y: &[f64]) -> f64 {
        let (u_obs, _) = u_statistics(x, y);
        let n = x.len() + y.len();
        let ranks: Vec<usize> = (1..=n).collect();
        let us: Vec<f64> = combinations(&ranks, x.len())
            .iter()
            .map(|c| c.iter().sum::<usize>() as f64 - (x.len() * (x.len() + 1) / 2) as f64)
            .collect();
        let total = us.len() as f64;
        let lo = us.iter().filter(|&&u| u <= u_obs).count() as f64 / total;
        let hi = us.iter().filter(|&&u| u >= u_obs).count() as f64 / total;
        (2.0 * lo.min(hi)).min(1.0)
    }

    #[test]
    fn separated_pairs_exact() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u_x, 0.0);
        assert_eq!(r.u_y, 4.0);
        assert_eq!(r.method, PMethod::Exact);
        assert_eq!(r.p_value, 1.0 / 3.0);
        assert_eq!(r.smaller, Smaller::X);
    }

    #[test]
    fn identical_samples() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        let r = mann_whitney_u(&x, &x).unwrap();
        assert_eq!(r.u_x, 12.5);
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney_u(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.method, PMethod::Degenerate);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.u_x, 3.0);
    }

    #[test]
    fn complete_separation_large() {
        let x: Vec<f64> = (1..=30).map(f64::from).collect();
        let y: Vec<f64> = (31..=60).map(f64::from).collect();
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert!(r.p_value < 0.001);
        // z = (450 - 0.5)/sqrt(4575) ≈ 6.646
        assert!((r.p_value - erfc(6.6456 / std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        for (a, b) in [(1, 1), (3, 4), (10, 10), (2, 9)] {
            let total: f64 = u_null_counts(a, b).iter().sum();
            let expect = crate::bounds::binomial((a + b) as u64, a as u64);
            assert_eq!(total, expect.to_string().parse::<f64>().unwrap());
        }
    }

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[5]), Some(5.0));
        assert_eq!(median(&[4, 1, 3, 2]), Some(2.5));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert_eq!(mann_whitney_u(&[], &[1.0]).unwrap_err(), Error::EmptySample);
    }

    proptest! {
        #[test]
        fn exact_matches_brute_force(x in proptest::collection::hash_set(0u32..1000, 1..7), y in proptest::collection::hash_set(1000u32..2000, 1..7), shift in 0u32..1500) {
            // shifting y interleaves the samples without creating ties
            let xs: Vec<f64> = x.iter().map(|&v| v as f64 * 2.0).collect();
            let ys: Vec<f64> = y.iter().map(|&v| (i64::from(v) - i64::from(shift)) as f64 * 2.0 + 1.0).collect();
            let p = exact_p_value(&xs, &ys).unwrap();
            prop_assert!((p - brute_exact(&xs, &ys)).abs() < 1e-12);
        }

        #[test]
        fn swap_symmetry(x in proptest::collection::vec(0u8..20, 1..30), y in proptest::collection::vec(0u8..20, 1..30)) {
            let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let ys: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let a = mann_whitney_u(&xs, &ys).unwrap();
            let b = mann_whitney_u(&ys, &xs).unwrap();
            prop_assert!((a.u_x - b.u_y).abs() < 1e-9);
            prop_assert!((a.u_x + b.u_x - (xs.len() * ys.len()) as f64).abs() < 1e-9);
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
    }
}
