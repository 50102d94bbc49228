//! Closed forms for the random flat model: moments of the number of
//! satisfying assignments, chi-square and total-variation bounds for the
//! planted and lightly planted alternatives, and the sample-size
//! thresholds at which exhaustive and max-coverage tests separate.
//!
//! Everything here works in the log2 domain (or exact rationals) so that
//! regimes like `E[Z] = 2^1000` or chi-square values near `1e-15` come out
//! at full f64 accuracy.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// A nonnegative quantity carried in the log2 domain; `linear` is the
/// rounded-to-f64 value and may flush to 0 or infinity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogValue {
    pub log2: f64,
    pub linear: f64,
}

impl LogValue {
    fn from_log2(log2: f64) -> Self {
        LogValue {
            log2,
            linear: log2.exp2(),
        }
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    Ok(())
}

fn check_pi(pi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::Parameter(format!("pi must lie in [0, 1], got {pi}")));
    }
    Ok(())
}

/// `log2(1 - 2^-k)`, the per-flat log-probability that a fixed point
/// avoids a uniform flat.
fn log2_avoid(k: usize) -> f64 {
    (-(0.5f64.powi(k as i32))).ln_1p() / std::f64::consts::LN_2
}

/// Critical constraint density of the exhaustive test:
/// `delta_k = log(1/2) / log(1 - 2^-k)`. With `m = delta * n` flats the
/// expected count `E[Z] = 2^n (1 - 2^-k)^m` crosses 1 at `delta = delta_k`.
pub fn delta_k(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("delta_k needs k >= 1".to_string()));
    }
    Ok(-1.0 / log2_avoid(k))
}

/// Expected number of satisfying assignments over `m` uniform flats:
/// `E[Z] = 2^n (1 - 2^-k)^m`.
pub fn expected_z(n: usize, k: usize, m: usize) -> Result<LogValue> {
    check_nk(n, k)?;
    Ok(LogValue::from_log2(n as f64 + m as f64 * log2_avoid(k)))
}

/// Probability that one uniform flat avoids both points of a fixed pair of
/// distinct points, exactly: with `M = 2^n - 2^(n-k)` points off any flat,
/// a uniform flat avoids an ordered pair with probability
/// `M (M - 1) / (2^n (2^n - 1))`.
pub fn pair_exclusion_prob(n: usize, k: usize) -> Result<BigRational> {
    check_nk(n, k)?;
    let points = BigInt::from(BigUint::one() << n);
    let off = &points - BigInt::from(BigUint::one() << (n - k));
    if points == BigInt::one() {
        return Err(Error::Parameter("pair probability needs n >= 1".to_string()));
    }
    Ok(BigRational::new(
        &off * (&off - BigInt::one()),
        &points * (&points - BigInt::one()),
    ))
}

/// Second moment `E[Z^2] = E[Z] + 2^n (2^n - 1) p_pair^m` where `p_pair`
/// is the pair exclusion probability.
pub fn expected_z2(n: usize, k: usize, m: usize) -> Result<LogValue> {
    check_nk(n, k)?;
    if m == 0 {
        return Ok(LogValue::from_log2(2.0 * n as f64));
    }
    let diag = n as f64 + m as f64 * log2_avoid(k);
    let pair = pair_exclusion_prob(n, k)?;
    if pair.is_zero() {
        return Ok(LogValue::from_log2(diag));
    }
    let pairs_count = BigUint::one() << (2 * n);
    let pairs_count = pairs_count - (BigUint::one() << n);
    let cross = log2_biguint(&pairs_count) + m as f64 * log2_ratio(&pair);
    Ok(LogValue::from_log2(log2_sum(diag, cross)))
}

/// `log2(2^a + 2^b)`.
fn log2_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// Likelihood ratio of the pure planted model against the uniform model
/// given an observed satisfying count: `Z / E[Z]`.
pub fn likelihood_ratio(z: u64, n: usize, k: usize, m: usize) -> Result<f64> {
    let ez = expected_z(n, k, m)?;
    if z == 0 {
        return Ok(0.0);
    }
    Ok(((z as f64).log2() - ez.log2).exp2())
}

/// Chi-square divergence of the lightly planted model (planting strength
/// `pi`) from the uniform model, exactly in closed form:
///
/// `chi2 = 2^-n (1 + pi^2 / (2^k - 1))^m
///        + (1 - 2^-n) (1 + pi^2 r)^m - 1`
///
/// where `1 + r = p_pair / (1 - 2^-k)^2`. At `pi = 1` this equals
/// `E[Z^2] / E[Z]^2 - 1`. Both terms are evaluated with `ln_1p`/`exp_m1`
/// so the result stays accurate when it is tiny.
pub fn chi2_divergence(n: usize, k: usize, m: usize, pi: f64) -> Result<f64> {
    check_nk(n, k)?;
    check_pi(pi)?;
    if m == 0 || pi == 0.0 {
        return Ok(0.0);
    }
    let same = 1.0 / (0.5f64.powi(-(k as i32)) - 1.0);
    let diag = -(n as f64) + m as f64 * (1.0 + pi * pi * same).log2();

    let avoid = BigRational::new(
        BigInt::from((BigUint::one() << k) - BigUint::one()),
        BigInt::from(BigUint::one() << k),
    );
    let r = pair_exclusion_prob(n, k)? / (&avoid * &avoid) - BigRational::one();
    debug_assert!(!r.is_positive());
    let cross = (-(0.5f64.powi(n as i32))).ln_1p()
        + m as f64 * (pi * pi * ratio_to_f64(&r)).ln_1p();
    Ok((diag.exp2() + cross.exp_m1()).max(0.0))
}

/// Total variation upper bound from the chi-square divergence:
/// `TV <= sqrt(chi2) / 2`.
pub fn tv_upper_bound(n: usize, k: usize, m: usize, pi: f64) -> Result<f64> {
    Ok(chi2_divergence(n, k, m, pi)?.sqrt() / 2.0)
}

/// Decision threshold of the max-coverage test with margin parameter
/// `pi`: reject the null when the best assignment avoids strictly more
/// than `((1 - 2^-k) + pi 2^-(k+1)) m` flats.
pub fn sigma_threshold(k: usize, m: usize, pi: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("sigma_threshold needs k >= 1".to_string()));
    }
    check_pi(pi)?;
    Ok(((1.0 - 0.5f64.powi(k as i32)) + pi * 0.5f64.powi(k as i32 + 1)) * m as f64)
}

/// Hoeffding tail bounds for the max-coverage test at margin `alpha` and
/// density `delta = m / n`: the union bound over all `2^n` assignments
/// under the uniform model, and the single-point bound under planting.
/// Both are clamped to `[0, 1]`.
pub fn sigma_tail_bounds(alpha: f64, delta: f64, n: usize) -> Result<(f64, f64)> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::Parameter(format!(
            "margin alpha must be positive, got {alpha}"
        )));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::Parameter(format!(
            "density delta must be positive, got {delta}"
        )));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".to_string()));
    }
    let rate = 2.0 * alpha * alpha * delta;
    let unif = (-(rate - std::f64::consts::LN_2) * n as f64).exp();
    let planted = (-rate * n as f64).exp();
    Ok((unif.clamp(0.0, 1.0), planted.clamp(0.0, 1.0)))
}

/// Constraint densities (in units of `n`) above which the lightly planted
/// model at strength `pi` becomes detectable: the max-coverage test
/// succeeds past `2^k ln 2 / pi^2`, and the information-theoretic
/// lower-bound argument degrades past `2^(2k-1) ln 2 / pi^2`.
pub fn light_thresholds(k: usize, pi: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::Parameter("light_thresholds needs k >= 1".to_string()));
    }
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::Parameter(format!(
            "pi must lie in (0, 1], got {pi}"
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let base = 2f64.powi(k as i32) * ln2 / (pi * pi);
    Ok((base, base * 2f64.powi(k as i32 - 1)))
}

/// All closed-form quantities for one parameter point, for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub pi: f64,
    pub delta: f64,
    pub delta_k: f64,
    pub expected_z: LogValue,
    pub expected_z2: LogValue,
    pub pair_prob: String,
    pub chi2: f64,
    pub tv_upper: f64,
    pub delta_k_pi: f64,
    pub tilde_delta_k_pi: f64,
}

pub fn theory_report(n: usize, k: usize, m: usize, pi: f64) -> Result<TheoryReport> {
    check_nk(n, k)?;
    check_pi(pi)?;
    let (delta_k_pi, tilde_delta_k_pi) = if pi > 0.0 {
        light_thresholds(k, pi)?
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(TheoryReport {
        n,
        k,
        m,
        pi,
        delta: m as f64 / n as f64,
        delta_k: delta_k(k)?,
        expected_z: expected_z(n, k, m)?,
        expected_z2: expected_z2(n, k, m)?,
        pair_prob: pair_exclusion_prob(n, k)?.to_string(),
        chi2: chi2_divergence(n, k, m, pi)?,
        tv_upper: tv_upper_bound(n, k, m, pi)?,
        delta_k_pi,
        tilde_delta_k_pi,
    })
}

/// Base-2 logarithm of a positive big integer, accurate to f64 precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_u64().expect("fits in u64") as f64).log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_u64().expect("53 bits fit in u64") as f64;
    top.log2() + shift as f64
}

/// `log2` of a positive rational.
pub fn log2_ratio(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "log2 of non-positive rational");
    log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())
}

/// Rational to f64 through logarithms; safe for values far outside the
/// f64 exponent range (they round to 0 or +/- infinity).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let magnitude =
        (log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())).exp2();
    if r.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}
