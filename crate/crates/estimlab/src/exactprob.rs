//! Arbitrary-precision rational evaluation of every closed-form probability
//! the laboratory verifies: Gaussian binomial coefficients, the rank
//! distribution of uniform random matrices over F_q, and the learnability /
//! estimability constants for linearly biased ERMs and parity estimators.
//!
//! Everything in this module is exact. Conversion to floating point happens
//! only at the reporting boundary, because the headline claims are strict
//! inequalities on exact quantities (e.g. eta > 0.4, failure > 0.32).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Shorthand: the rational n/d.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// q^e as an exact rational, for possibly negative e.
pub fn q_pow(q: u64, e: i64) -> BigRational {
    let base = BigInt::from(q);
    if e >= 0 {
        BigRational::from_integer(base.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), base.pow((-e) as u32))
    }
}

/// Parse "p/q", a decimal like "0.25", or an integer into an exact
/// rational.
pub fn parse_rational(s: &str) -> crate::error::Result<BigRational> {
    use crate::error::Error;
    let s = s.trim();
    let bad = || Error::InvalidConfig(format!("cannot parse '{s}' as a rational"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if !frac_part.chars().all(|c| c.is_ascii_digit()) || frac_part.is_empty() {
            return Err(bad());
        }
        let digits = frac_part.len() as u32;
        let int_part = if int_part.is_empty() || int_part == "-" {
            format!("{int_part}0")
        } else {
            int_part.to_string()
        };
        let whole: BigInt = int_part.parse().map_err(|_| bad())?;
        let frac: BigInt = frac_part.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(digits);
        let signed_frac = if s.starts_with('-') { -frac } else { frac };
        return Ok(BigRational::new(whole * &scale + signed_frac, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Render an exact rational as its reduced fraction.
pub fn fraction_string(x: &BigRational) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Render an exact rational as a decimal with `digits` significant digits.
pub fn decimal_string(x: &BigRational, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let mut v = x.abs();
    // scale into [1, 10) while tracking the decimal exponent
    let ten = BigRational::from_integer(BigInt::from(10));
    let one = BigRational::one();
    let mut exp10: i64 = 0;
    while v >= ten {
        v /= ten.clone();
        exp10 += 1;
    }
    while v < one {
        v *= ten.clone();
        exp10 -= 1;
    }
    // round to `digits` significant digits
    let scale = BigInt::from(10u32).pow((digits - 1) as u32);
    let scaled = (&v * BigRational::from_integer(scale.clone())).round();
    let mut mantissa = scaled.to_integer();
    // rounding can push the mantissa to 10^digits
    if mantissa == &scale * BigInt::from(10) {
        mantissa = scale;
        exp10 += 1;
    }
    let digits_str = mantissa.to_string();
    let sign = if neg { "-" } else { "" };
    if exp10 >= 0 && (exp10 as usize) < digits {
        let point = exp10 as usize + 1;
        let (int_part, frac_part) = digits_str.split_at(point);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    } else if exp10 < 0 && exp10 > -5 {
        let zeros = "0".repeat((-exp10 - 1) as usize);
        let trimmed = digits_str.trim_end_matches('0');
        format!("{sign}0.{zeros}{trimmed}")
    } else {
        let (first, rest) = digits_str.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{sign}{first}e{exp10}")
        } else {
            format!("{sign}{first}.{rest}e{exp10}")
        }
    }
}

/// Gaussian binomial coefficient `[nn choose k]_q` as an integer.
///
/// Computed by the product form with exact division; every partial product
/// is itself a Gaussian coefficient, hence integral.
pub fn gaussian_coeff_int(nn: u64, k: u64, q: u64) -> BigInt {
    if k > nn {
        return BigInt::zero();
    }
    let q = BigInt::from(q);
    let mut acc = BigInt::one();
    for i in 1..=k {
        acc *= q.pow((nn - k + i) as u32) - BigInt::one();
        let den = q.pow(i as u32) - BigInt::one();
        debug_assert!((&acc % &den).is_zero());
        acc /= den;
    }
    acc
}

/// Gaussian binomial coefficient as a rational (always integer-valued;
/// `k > nn` yields 0 by convention).
pub fn gaussian_coeff(nn: u64, k: u64, q: u64) -> BigRational {
    BigRational::from_integer(gaussian_coeff_int(nn, k, q))
}

fn binom2(m: u64) -> i64 {
    (m as i64) * (m as i64 - 1) / 2
}

/// Probability that an `n1 x n2` matrix with i.i.d. uniform entries over
/// F_q has rank `r`:
///
/// `R_q(n1,n2,r) = [n2 r]_q * sum_{l=0}^{r} (-1)^{r-l} [r l]_q
///  q^{n1(l-n2) + C(r-l,2)}`
///
/// Out-of-range `r` yields 0.
pub fn rank_prob(q: u64, n1: u64, n2: u64, r: u64) -> BigRational {
    if r > n1.min(n2) {
        return BigRational::zero();
    }
    // every term shares the denominator q^{n1 n2}; summing integer
    // numerators first keeps the big-integer reductions to a single gcd
    let qb = BigInt::from(q);
    let mut sum = BigInt::zero();
    for l in 0..=r {
        let shifted_exp = (n1 * l) as i64 + binom2(r - l);
        let term = gaussian_coeff_int(r, l, q) * qb.pow(shifted_exp as u32);
        if (r - l).is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
    }
    BigRational::new(
        gaussian_coeff_int(n2, r, q) * sum,
        qb.pow((n1 * n2) as u32),
    )
}

/// Probability that an `n1 x n2` i.i.d.-uniform matrix over F_q has full
/// rank: `prod_{k=0}^{c1-1} (1 - q^{k-c2})` with `c1 = min`, `c2 = max`.
pub fn full_rank_prob(q: u64, n1: u64, n2: u64) -> BigRational {
    let c1 = n1.min(n2);
    let c2 = n1.max(n2) as i64;
    let mut acc = BigRational::one();
    for k in 0..c1 {
        acc *= BigRational::one() - q_pow(q, k as i64 - c2);
    }
    acc
}

/// `P(sigma spanned by the rows | rank = k)` for an `n x (n+1)` uniform
/// matrix and any fixed nonzero sigma: `(q^k - 1) / (q^{n+1} - 1)`.
fn span_given_rank(q: u64, n: u64, k: u64) -> BigRational {
    let qb = BigInt::from(q);
    BigRational::new(
        qb.pow(k as u32) - BigInt::one(),
        qb.pow((n + 1) as u32) - BigInt::one(),
    )
}

/// Exact failure probability of a bias-matched uniform ERM on its own
/// distribution family: the learner misses the generating function iff the
/// reduced `n x n` input matrix is rank deficient and the tie-break picks
/// the wrong consistent hypothesis:
///
/// `delta = sum_{k<n} (1 - q^{k-n}) R_q(n,n,k)`
pub fn delta_learn(q: u64, n: u64) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 0..n {
        acc += (BigRational::one() - q_pow(q, k as i64 - n as i64)) * rank_prob(q, n, n, k);
    }
    acc
}

/// Exact error probability of a biased ERM over the two-class family
/// (bias class and its shifted sibling, mixed evenly):
///
/// `beta = 1/2 sum_{k=0}^{n} [ (q^{k-n} - 2 q^{k-n-1}) s_k + 2 - q^{k-n} ]
///  R_q(n,n+1,k)` with `s_k = (q^k-1)/(q^{n+1}-1)`.
pub fn beta_nonlearn(q: u64, n: u64) -> BigRational {
    let half = ratio(1, 2);
    let mut acc = BigRational::zero();
    for k in 0..=n {
        let s = span_given_rank(q, n, k);
        let a = q_pow(q, k as i64 - n as i64);
        let b = q_pow(q, k as i64 - n as i64 - 1);
        let bracket = (a.clone() - ratio(2, 1) * b) * s + ratio(2, 1) - a;
        acc += bracket * rank_prob(q, n, n + 1, k);
    }
    half * acc
}

/// `gamma = 1 - P(sigma spanned by the rows of the reduced n x (n+1)
/// matrix)`; one minus the total-variation distance between the two
/// class-conditional sample distributions.
pub fn gamma_tv(q: u64, n: u64) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 0..=n {
        acc += span_given_rank(q, n, k) * rank_prob(q, n, n + 1, k);
    }
    BigRational::one() - acc
}

/// The exact estimator-failure level `eta = F(q, n)` below which no
/// estimator can track a linearly biased ERM at accuracy `(q-1)/2q`:
///
/// `F(q,n) = 1/2 sum_{k=0}^{n} [ (q^{k-n} - 2q^{k-n-1} - 1) s_k + 2 -
///  q^{k-n} ] R_q(n,n+1,k) - sum_{k<n} (1 - q^{k-n}) R_q(n,n,k)`
///
/// Equivalently `gamma/2 + beta - delta - 1/2` (tested).
pub fn eta_f(q: u64, n: u64) -> BigRational {
    let half = ratio(1, 2);
    let mut first = BigRational::zero();
    for k in 0..=n {
        let s = span_given_rank(q, n, k);
        let a = q_pow(q, k as i64 - n as i64);
        let b = q_pow(q, k as i64 - n as i64 - 1);
        let bracket = (a.clone() - ratio(2, 1) * b - BigRational::one()) * s + ratio(2, 1) - a;
        first += bracket * rank_prob(q, n, n + 1, k);
    }
    half * first - delta_learn(q, n)
}

/// Exact failure probability of the optimal deterministic estimator for a
/// biased ERM over parities (q = 2) at error level 1/4:
///
/// `sum_{k=0}^{m} 2^{k-m-1} R_2(n, m+1, k)` with `m = min(n, d-1)`.
pub fn parity_estimator_fail(d: u64, n: u64) -> BigRational {
    assert!(n >= 1 && n <= d, "requires 1 <= n <= d");
    let m = n.min(d - 1);
    let mut acc = BigRational::zero();
    for k in 0..=m {
        acc += q_pow(2, k as i64 - m as i64 - 1) * rank_prob(2, n, m + 1, k);
    }
    acc
}

/// `P(E-)`: probability that the reduced `n x (n+1)` binary matrix has full
/// row rank but does not span the bias direction. A randomized biased ERM
/// cannot be estimated with failure below `P(E-)/2`:
///
/// `R_2(n, n+1, n) * (1 - (2^n - 1)/(2^{n+1} - 1))`
pub fn prob_e_minus(n: u64) -> BigRational {
    assert!(n >= 1);
    rank_prob(2, n, n + 1, n) * (BigRational::one() - span_given_rank(2, n, n))
}

/// The derived constants of the linear-functional setting, bundled for
/// reporting: dimension-independent in d (only q and n enter the closed
/// forms), with `T0 = T1 = q^n` distributions per class.
#[derive(Debug, Clone)]
pub struct TheoryParams {
    pub q: u64,
    pub d: u64,
    pub n: u64,
    /// loss level of any wrong hypothesis: 1 - 1/q
    pub alpha: BigRational,
    /// error probability of the biased ERM over the two-class family
    pub beta: BigRational,
    /// one minus the TV distance between the class sample distributions
    pub gamma: BigRational,
    /// failure probability of the biased ERM on its matched family
    pub delta: BigRational,
    /// learning accuracy of the matched ERM (exact consistency: 0)
    pub epsilon: BigRational,
    /// estimator failure level F(q, n)
    pub eta: BigRational,
    /// estimation accuracy under test: (alpha - epsilon)/2 = (q-1)/2q
    pub nu: BigRational,
    /// distribution counts: T = T0 + T1, both q^n
    pub t0: BigInt,
    pub t1: BigInt,
    pub t: BigInt,
}

impl TheoryParams {
    pub fn lin(q: u64, d: u64, n: u64) -> Self {
        assert!(n <= d);
        let t0 = BigInt::from(q).pow(n as u32);
        let t1 = t0.clone();
        let t = &t0 + &t1;
        let alpha = BigRational::one() - q_pow(q, -1);
        let nu = &alpha / BigRational::from_integer(BigInt::from(2));
        let params = TheoryParams {
            q,
            d,
            n,
            alpha,
            beta: beta_nonlearn(q, n),
            gamma: gamma_tv(q, n),
            delta: delta_learn(q, n),
            epsilon: BigRational::zero(),
            eta: eta_f(q, n),
            nu,
            t0,
            t1,
            t,
        };
        params.check();
        params
    }

    fn check(&self) {
        let unit = |x: &BigRational| *x >= BigRational::zero() && *x <= BigRational::one();
        assert!(unit(&self.alpha));
        assert!(unit(&self.beta));
        assert!(unit(&self.gamma));
        assert!(unit(&self.delta));
        assert!(unit(&self.epsilon));
        assert!(unit(&self.nu));
        assert_eq!(self.t, &self.t0 + &self.t1);
    }
}

/// Reporting helper: exact value alongside f64 and reduced-fraction text.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("rational fits in f64 range")
}
