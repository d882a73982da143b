//! Arbitrary-precision helpers.
//!
//! Every closed-form quantity in this crate is carried as an [`ExactRational`]
//! (always in lowest terms, positive denominator). Conversion to `f64` goes
//! through [`to_real`], which is correctly rounded. For totals above
//! [`DEFAULT_EXACT_LIMIT`] the floating evaluators use the log-space helpers
//! at the bottom of this module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub type ExactInteger = BigInt;
pub type ExactRational = BigRational;

/// Largest total number of balls evaluated in exact arithmetic by the
/// `*_real` entry points before they switch to log-space floating point.
pub const DEFAULT_EXACT_LIMIT: u64 = 2000;

pub fn int(n: i64) -> ExactInteger {
    BigInt::from(n)
}

/// `num / den` reduced. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_int(n: impl Into<BigInt>) -> ExactRational {
    BigRational::from_integer(n.into())
}

/// `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binomial(n: u64, k: i64) -> ExactInteger {
    if k < 0 || k as u64 > n {
        return BigInt::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigInt::one();
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Row of binomials `C(n, 0..=n)` built by successive ratios.
pub fn binomial_row(n: u64) -> Vec<ExactInteger> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for i in 0..n {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
        row.push(c.clone());
    }
    row
}

/// Central binomial probability `2^{-2k} C(2k, k)`: the chance of exactly
/// `k` heads in `2k` fair tosses.
pub fn central_prob(k: u64) -> ExactRational {
    BigRational::new(binomial(2 * k, k as i64), BigInt::one() << (2 * k) as usize)
}

/// Successive ratios `C(n, i+1) / C(n, i) = (n - i) / (i + 1)` for `i = 0..n`.
pub fn binom_row_ratio_iter(n: u64) -> impl Iterator<Item = ExactRational> {
    (0..n).map(move |i| BigRational::new(BigInt::from(n - i), BigInt::from(i + 1)))
}

/// Correctly rounded conversion. Values beyond the `f64` range are an error.
pub fn to_real(x: &ExactRational) -> Result<f64> {
    let v = x.to_f64().ok_or(Error::Overflow)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow)
    }
}

/// Like [`to_real`] but for values known to be in range (probabilities,
/// bounded expectations).
pub(crate) fn real(x: &ExactRational) -> f64 {
    to_real(x).expect("value within f64 range")
}

pub fn ceil(x: &ExactRational) -> ExactInteger {
    x.numer().div_ceil(x.denom())
}

/// Parses `"p/q"`, a plain integer, or a finite decimal such as `"0.505"`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches(['-', '+']);
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// `0 < x < 1`.
pub(crate) fn in_open_unit(x: &ExactRational) -> bool {
    x.is_positive() && x < &BigRational::one()
}

/// `ln C(n, k)` via log-gamma; `-inf` outside the support.
pub fn ln_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `p_k` in floating point. Exact below `k = 500`, log-gamma above.
pub fn central_prob_real(k: u64) -> f64 {
    if k < 500 {
        real(&central_prob(k))
    } else {
        (ln_binomial(2 * k, k as i64) - (2 * k) as f64 * std::f64::consts::LN_2).exp()
    }
}

/// `2^{-n} * sum_{i=lo}^{hi} C(n, i)` evaluated in log space.
pub fn binomial_mass_real(n: u64, lo: i64, hi: i64) -> f64 {
    let lo = lo.max(0);
    let hi = hi.min(n as i64);
    if lo > hi {
        return 0.0;
    }
    // anchor at the largest term in range so all scaled terms are <= 1
    let mode = (n / 2) as i64;
    let anchor = mode.clamp(lo, hi);
    let ln_anchor = if n <= 2000 {
        real(&BigRational::new(binomial(n, anchor), BigInt::one() << n as usize)).ln()
    } else {
        ln_binomial(n, anchor) - n as f64 * std::f64::consts::LN_2
    };
    let mut acc = crate::sum::CompensatedSum::default();
    acc.add(1.0);
    let mut t = 1.0f64;
    for i in anchor..hi {
        t *= (n as i64 - i) as f64 / (i + 1) as f64;
        if t < 1e-300 {
            break;
        }
        acc.add(t);
    }
    t = 1.0;
    let mut i = anchor;
    while i > lo {
        t *= i as f64 / (n as i64 - i + 1) as f64;
        if t < 1e-300 {
            break;
        }
        acc.add(t);
        i -= 1;
    }
    (ln_anchor + acc.value().ln()).exp()
}
