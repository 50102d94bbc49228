//! Helpers shared by the test trees: chi-square goodness-of-fit and
//! homogeneity statistics with exact p-values, and exact rational oracles
//! for the first two moments of the satisfying-assignment count.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use flatsat_core::theory::pair_exclusion_prob;
pub use flatsat_core::theory::{log2_biguint, log2_ratio, ratio_to_f64};

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom.
pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df).expect("positive df").cdf(stat.max(0.0))
}

/// Pearson statistic and p-value of observed counts against the uniform
/// distribution over the given bins.
pub fn gof_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    (stat, chi2_sf(stat, counts.len() as f64 - 1.0))
}

/// Two-sample homogeneity statistic for parallel count vectors (same bins
/// in the same order) and its p-value. Bins empty in both samples are
/// skipped and do not count toward the degrees of freedom.
pub fn homogeneity(a: &[u64], b: &[u64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "count vectors must align");
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let t = x as f64 + y as f64;
        if t == 0.0 {
            continue;
        }
        bins += 1;
        // Pearson statistic of the 2 x bins contingency table.
        let ea = t * na / (na + nb);
        let eb = t * nb / (na + nb);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    (stat, chi2_sf(stat, bins.saturating_sub(1) as f64))
}

/// `E[Z]` for `m` independent uniform flats of codimension `k` in `F_2^n`,
/// exactly: `2^n * (1 - 2^-k)^m`.
pub fn exact_expected_z(n: usize, k: usize, m: usize) -> BigRational {
    let per_point = BigRational::new(
        BigInt::from((BigUint::one() << k) - BigUint::one()),
        BigInt::from(BigUint::one() << k),
    );
    BigRational::from(BigInt::from(BigUint::one() << n)) * pow_usize(&per_point, m)
}

/// `E[Z^2]` under the same model: the diagonal `E[Z]` plus
/// `2^n (2^n - 1)` ordered pairs each avoided with the exact pair
/// probability.
pub fn exact_expected_z2(n: usize, k: usize, m: usize) -> BigRational {
    let points = BigInt::from(BigUint::one() << n);
    let pair = pair_exclusion_prob(n, k).expect("valid parameters");
    exact_expected_z(n, k, m)
        + BigRational::from(&points * (&points - BigInt::one())) * pow_usize(&pair, m)
}

/// Exact chi-square divergence `E[Z^2] / E[Z]^2 - 1` of the pure planted
/// model against the uniform model.
pub fn exact_chi2_pure(n: usize, k: usize, m: usize) -> BigRational {
    let ez = exact_expected_z(n, k, m);
    exact_expected_z2(n, k, m) / (&ez * &ez) - BigRational::one()
}

fn pow_usize(r: &BigRational, e: usize) -> BigRational {
    let mut out = BigRational::one();
    let mut base = r.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            out *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_sf_known_points() {
        // Median of chi-square(1) is about 0.4549.
        assert!((chi2_sf(0.4549, 1.0) - 0.5).abs() < 1e-3);
        // 99.9th percentile of chi-square(5) is about 20.515.
        assert!((chi2_sf(20.515, 5.0) - 1e-3).abs() < 1e-4);
    }

    #[test]
    fn gof_flags_skewed_counts_only() {
        let (_, p) = gof_uniform(&[100, 101, 99, 100]);
        assert!(p > 0.9);
        let (_, p) = gof_uniform(&[160, 40, 100, 100]);
        assert!(p < 1e-6);
    }

    #[test]
    fn homogeneity_flags_different_sources_only() {
        let (_, p) = homogeneity(&[500, 500, 500], &[510, 490, 500]);
        assert!(p > 0.5);
        let (_, p) = homogeneity(&[800, 200, 500], &[500, 500, 500]);
        assert!(p < 1e-6);
    }

    #[test]
    fn exact_moments_small_case() {
        // n = 2, k = 1, m = 1: E[Z] = 4 * 1/2 = 2. For E[Z^2], every
        // 2-subset of F_2^2 is one of the 6 flats, so a fixed ordered pair
        // of distinct points is jointly avoided by 6 - 3 - 3 + 1 = 1 flat:
        // E[Z^2] = 4 * (1/2) + 12 * (1/6) = 4.
        assert_eq!(exact_expected_z(2, 1, 1), BigRational::from(BigInt::from(2)));
        assert_eq!(exact_expected_z2(2, 1, 1), BigRational::from(BigInt::from(4)));
    }

    #[test]
    fn log_conversion_handles_extremes() {
        let r = BigRational::new(BigInt::from(3), BigInt::from(4));
        assert!((ratio_to_f64(&r) - 0.75).abs() < 1e-15);
        let huge = BigRational::from(BigInt::from(BigUint::one() << 4000));
        assert_eq!(ratio_to_f64(&huge), f64::INFINITY);
        let tiny = BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << 4000));
        assert_eq!(ratio_to_f64(&tiny), 0.0);
        assert!(ratio_to_f64(&-huge) == f64::NEG_INFINITY);
    }
}
