//! Worst-case test counts for both samplers and the expected number of
//! planted sets inside a random subset. All arithmetic is exact.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rc::ReductionSchedule;

/// Exact `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn to_u128(x: BigUint) -> u128 {
    x.to_u128().unwrap_or(u128::MAX)
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    usize::BITS - (n - 1).leading_zeros()
}

/// Maximum tests for one SIGHT run:
/// `k_max·⌈log₂ a0⌉ + Σ_{j=k_min}^{k_max} C(k_max, j) + 1`.
pub fn sight_max_tests(a0: usize, k_min: usize, k_max: usize) -> Result<u128> {
    if a0 < 2 {
        return Err(Error::InvalidA0 { a0, k_max });
    }
    let search = k_max as u128 * ceil_log2(a0) as u128;
    let subsets: BigUint = (k_min..=k_max).map(|j| binomial(k_max as u64, j as u64)).sum();
    Ok(search + to_u128(subsets) + 1)
}

/// Maximum positive tests in SIGHT's binary-search phase: `k_max·⌈log₂ a0⌉`.
pub fn sight_max_positive(a0: usize, k_max: usize) -> Result<u128> {
    if a0 < 2 {
        return Err(Error::InvalidA0 { a0, k_max });
    }
    Ok(k_max as u128 * ceil_log2(a0) as u128)
}

/// Maximum tests for one RC run:
/// `1 + (|A|−1)·t_max + Σ_{k=k_min}^{k_max} C(a_final, k)`.
pub fn rc_max_tests(schedule: &ReductionSchedule, t_max: usize, k_min: usize, k_max: usize) -> u128 {
    let steps = (schedule.len() as u128 - 1) * t_max as u128;
    let a_final = schedule.a_final() as u64;
    let subsets: BigUint = (k_min..=k_max).map(|k| binomial(a_final, k as u64)).sum();
    1 + steps + to_u128(subsets)
}

/// Maximum positive tests for one RC run: `|A| + 1`.
pub fn rc_max_positive(schedule_len: usize) -> u128 {
    schedule_len as u128 + 1
}

/// Expected number of planted `k`-sets inside a uniform random `M`-subset of
/// an `N`-universe holding `omega_k` of them: `C(M,k)/C(N,k)·omega_k`.
pub fn expected_planted_count(n: usize, m: usize, k: usize, omega_k: u64) -> Result<BigRational> {
    if m > n {
        return Err(Error::InvalidConfig(format!("subset size {m} exceeds universe {n}")));
    }
    let denom = binomial(n as u64, k as u64);
    if denom.is_zero() {
        return Err(Error::InvalidConfig(format!("k={k} exceeds universe {n}")));
    }
    let numer = binomial(m as u64, k as u64) * omega_k;
    Ok(BigRational::new(numer.into(), denom.into()))
}

/// Whether the expected (k+1):k planted-set ratio at subset size `m` is
/// strictly below the ratio at `m + c`.
pub fn ratio_monotone_check(n: usize, m: usize, c: usize, k: usize, omega_k: u64, omega_k1: u64) -> Result<bool> {
    if c == 0 || k + 1 > m || m + c > n || omega_k == 0 || omega_k1 == 0 {
        return Err(Error::InvalidConfig(format!(
            "ratio check needs k+1 ≤ M < M+c ≤ N and positive counts (N={n}, M={m}, c={c}, k={k})"
        )));
    }
    let ratio = |size: usize| -> Result<BigRational> {
        Ok(expected_planted_count(n, size, k + 1, omega_k1)? / expected_planted_count(n, size, k, omega_k)?)
    };
    Ok(ratio(m)? < ratio(m + c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rc::build_schedule;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Pascal's triangle, independent of the multiplicative formula.
    fn pascal(n: usize, k: usize) -> u128 {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row.get(k).copied().unwrap_or(0)
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..60 {
            for k in 0..=n + 1 {
                assert_eq!(binomial(n as u64, k as u64), BigUint::from(pascal(n, k)), "C({n},{k})");
            }
        }
    }

    #[test]
    fn ceil_log2_values() {
        let cases = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (16, 4), (17, 5), (176, 8), (256, 8)];
        for (n, want) in cases {
            assert_eq!(ceil_log2(n), want, "n={n}");
        }
    }

    #[test]
    fn sight_bounds() {
        assert_eq!(sight_max_tests(16, 2, 4).unwrap(), 28);
        assert_eq!(sight_max_tests(2, 2, 2).unwrap(), 4);
        assert_eq!(sight_max_tests(176, 2, 4).unwrap(), 44);
        assert_eq!(sight_max_positive(176, 4).unwrap(), 32);
        assert_eq!(sight_max_positive(16, 2).unwrap(), 8);
        assert_eq!(sight_max_positive(2, 1).unwrap(), 1);
        assert!(sight_max_tests(1, 2, 2).is_err());
        assert!(sight_max_positive(1, 2).is_err());
    }

    #[test]
    fn rc_bounds() {
        assert_eq!(rc_max_tests(&build_schedule(5, 4).unwrap(), 20, 2, 4), 26);
        assert_eq!(rc_max_tests(&build_schedule(16, 4).unwrap(), 20, 2, 4), 111);
        assert_eq!(rc_max_tests(&build_schedule(3, 2).unwrap(), 1, 2, 2), 4);
        assert_eq!(rc_max_positive(1), 2);
        assert_eq!(rc_max_positive(build_schedule(176, 4).unwrap().len()), 8);
        assert_eq!(rc_max_positive(build_schedule(16, 4).unwrap().len()), 5);
    }

    #[test]
    fn expected_count_examples() {
        assert_eq!(expected_planted_count(12, 12, 3, 9).unwrap(), rat(9, 1));
        assert_eq!(expected_planted_count(6, 4, 2, 3).unwrap(), rat(6, 5));
        assert_eq!(expected_planted_count(10, 2, 3, 7).unwrap(), rat(0, 1));
        assert!(expected_planted_count(5, 6, 2, 1).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert!(ratio_monotone_check(10, 4, 2, 2, 5, 9).unwrap());
        // equal counts, k=2: the ratio is (M-2)/(N-2)
        let left = expected_planted_count(10, 4, 3, 1).unwrap() / expected_planted_count(10, 4, 2, 1).unwrap();
        let right = expected_planted_count(10, 6, 3, 1).unwrap() / expected_planted_count(10, 6, 2, 1).unwrap();
        assert_eq!(left, rat(1, 4));
        assert_eq!(right, rat(1, 2));
        assert!(ratio_monotone_check(5, 3, 1, 2, 1, 1).unwrap());
        assert!(ratio_monotone_check(20, 4, 1, 3, 2, 3).unwrap());
        assert!(ratio_monotone_check(5, 3, 0, 2, 1, 1).is_err());
        assert!(ratio_monotone_check(5, 3, 1, 2, 0, 1).is_err());
        // both ratios vanish without (k+1)-sets
        assert!(ratio_monotone_check(5, 3, 1, 2, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn ratio_theorem_holds(n in 3usize..200, k in 1usize..8, mf in 0.0f64..1.0, cf in 0.0f64..1.0, wk in 1u64..10_000, wk1 in 1u64..10_000) {
            prop_assume!(k + 2 <= n);
            let m = k + 1 + ((n - k - 2) as f64 * mf) as usize;
            let c = 1 + ((n - m - 1) as f64 * cf) as usize;
            prop_assume!(m + c <= n);
            prop_assert!(ratio_monotone_check(n, m, c, k, wk, wk1).unwrap());
        }
    }
}
