//! The uncontrolled urn and its conditioned version.
//!
//! With `N = w + b` balls the chain moves on the black count alone: from `b`
//! it steps down with probability `(N - b) / N` (a white ball was drawn) and
//! up with probability `b / N`. Both ends are absorbing.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, ln_binomial, ratio, real, ExactRational, DEFAULT_EXACT_LIMIT};
use crate::identities::odd_harmonic;
use crate::recursion::{brute_force_values, ChainQuantity, ChainSpec, Scalar};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UrnState {
    pub white: u64,
    pub black: u64,
}

impl UrnState {
    pub const fn new(white: u64, black: u64) -> Self {
        Self { white, black }
    }

    pub const fn total(&self) -> u64 {
        self.white + self.black
    }

    pub const fn is_absorbing(&self) -> bool {
        self.white == 0 || self.black == 0
    }

    pub const fn swapped(&self) -> Self {
        Self { white: self.black, black: self.white }
    }

    fn require_live(&self) -> Result<()> {
        if self.total() == 0 {
            Err(Error::OutOfRange("the urn must hold at least one ball".into()))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for UrnState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.white, self.black)
    }
}

/// Probability that the urn ends with only black balls:
/// `2^{-(N-1)} sum_{i=0}^{b-1} C(N-1, i)`.
pub fn absorb_prob_black(state: UrnState) -> Result<ExactRational> {
    state.require_live()?;
    let UrnState { white, black } = state;
    if white == 0 {
        return Ok(BigRational::one());
    }
    if black == 0 {
        return Ok(BigRational::zero());
    }
    let top = state.total() - 1;
    let mut c = BigInt::one();
    let mut sum = BigInt::zero();
    for i in 0..black {
        sum += &c;
        c = c * BigInt::from(top - i) / BigInt::from(i + 1);
    }
    Ok(BigRational::new(sum, BigInt::one() << top as usize))
}

/// Expected final number of black balls, `N * P(all black)`.
pub fn expected_final_black(state: UrnState) -> Result<ExactRational> {
    Ok(absorb_prob_black(state)? * BigInt::from(state.total()))
}

/// Expected number of draws until absorption,
///
/// ```text
/// T(w, b) = N / (2(N-1)) sum_{i=0}^{m-1} sum_{j=i}^{N-2-i} C(N-1, i) / C(N-2, j),   m = min(w, b).
/// ```
///
/// The inner sum is carried as `S(i) = C(N-2, i) sum_{j=i}^{N-2-i} 1/C(N-2, j)`,
/// which satisfies `S(i) = 2 + S(i+1) (i+1)/(N-2-i)` and stays of order one,
/// so each outer term is `(N-1)/(N-1-i) * S(i)`.
pub fn expected_time(state: UrnState) -> Result<ExactRational> {
    state.require_live()?;
    Ok(time_double_sum(state, ratio))
}

fn time_double_sum<T: Scalar>(state: UrnState, frac: impl Fn(i64, i64) -> T) -> T {
    let m = state.white.min(state.black) as i64;
    if m == 0 {
        return T::zero();
    }
    let n = state.total() as i64;
    let l = n - 2;
    let top = l / 2;
    // S(i) is filled from the middle of the row outwards
    let mut s = if l % 2 == 0 { T::one() } else { frac(2, 1) };
    let mut terms = Vec::with_capacity(m as usize);
    for i in (0..=top).rev() {
        if i < top {
            s = frac(2, 1) + s * frac(i + 1, l - i);
        }
        if i < m {
            terms.push(s.clone() * frac(1, n - 1 - i));
        }
    }
    let total = terms.into_iter().fold(T::zero(), |acc, t| acc + t);
    total * frac(n, 2)
}

/// `T(k, k) = k sum_{i=0}^{k-1} 1/(2i+1)`.
pub fn expected_time_symmetric(k: u64) -> ExactRational {
    odd_harmonic(k) * BigInt::from(k)
}

/// `h(n) = P(absorb all black | N - n white, n black)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTable {
    total: u64,
    values: Vec<ExactRational>,
}

impl HarmonicTable {
    pub fn new(total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::OutOfRange("harmonic table needs N >= 1".into()));
        }
        let top = total - 1;
        let denom = BigInt::one() << top as usize;
        let mut values = Vec::with_capacity(total as usize + 1);
        let mut c = BigInt::one();
        let mut cumulative = BigInt::zero();
        values.push(BigRational::zero());
        for i in 0..total {
            cumulative += &c;
            values.push(BigRational::new(cumulative.clone(), denom.clone()));
            if i < top {
                c = c * BigInt::from(top - i) / BigInt::from(i + 1);
            }
        }
        Ok(Self { total, values })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, n: u64) -> &ExactRational {
        &self.values[n as usize]
    }

    pub fn values(&self) -> &[ExactRational] {
        &self.values
    }
}

pub fn harmonic_table(total: u64) -> Result<HarmonicTable> {
    HarmonicTable::new(total)
}

/// Transitions of the chain conditioned to end all black, from black count
/// `n` with `N` balls: `P*(n, k) = h(k) / h(n) * P(n, k)`. Zero-probability
/// moves are omitted; the up move comes first.
pub fn conditional_transition(n: u64, total: u64) -> Result<Vec<(u64, ExactRational)>> {
    let table = HarmonicTable::new(total)?;
    conditional_row(&table, n)
}

fn conditional_row(table: &HarmonicTable, n: u64) -> Result<Vec<(u64, ExactRational)>> {
    let total = table.total;
    if n == 0 {
        return Err(Error::UndefinedAtZero);
    }
    if n >= total {
        return Err(Error::OutOfRange(format!("state {n} is absorbing for N = {total}")));
    }
    let h = table.get(n);
    let up = ratio(n as i64, total as i64) * table.get(n + 1) / h;
    let down = ratio((total - n) as i64, total as i64) * table.get(n - 1) / h;
    Ok([(n + 1, up), (n - 1, down)].into_iter().filter(|(_, p)| !p.is_zero()).collect())
}

/// The conditioned chain on black counts `1..=N` as a [`ChainSpec`] indexed by
/// `n - 1`, with unit step cost.
pub fn conditional_chain(total: u64) -> Result<ChainSpec> {
    let table = HarmonicTable::new(total)?;
    let rows: Vec<Vec<(usize, ExactRational)>> = (1..total)
        .map(|n| {
            conditional_row(&table, n)
                .map(|row| row.into_iter().map(|(k, p)| ((k - 1) as usize, p)).collect())
        })
        .collect::<Result<_>>()?;
    ChainSpec::new(
        total as usize,
        |s| rows[s].clone(),
        |s| s as u64 == total - 1,
        |_| BigRational::one(),
        |s| BigRational::from_integer(BigInt::from(s + 1)),
    )
}

/// Expected absorption time given that the urn ends all black.
pub fn conditional_expected_time(state: UrnState) -> Result<ExactRational> {
    if state.black == 0 {
        return Err(Error::UndefinedAtZero);
    }
    if state.white == 0 {
        return Ok(BigRational::zero());
    }
    let chain = conditional_chain(state.total())?;
    let values = brute_force_values(&chain, ChainQuantity::TotalCost)?;
    Ok(values[(state.black - 1) as usize].clone())
}

/// The uncontrolled chain with `total` balls, indexed by black count, with
/// unit step cost and terminal payoff equal to the black count.
pub fn uncontrolled_chain(total: u64) -> Result<ChainSpec> {
    if total == 0 {
        return Err(Error::OutOfRange("need at least one ball".into()));
    }
    let n = total as i64;
    ChainSpec::new(
        total as usize + 1,
        |b| vec![(b - 1, ratio(n - b as i64, n)), (b + 1, ratio(b as i64, n))],
        |b| b == 0 || b as u64 == total,
        |_| BigRational::one(),
        |b| BigRational::from_integer(BigInt::from(b)),
    )
}

/// `P(all black)` in floating point; exact below [`DEFAULT_EXACT_LIMIT`].
pub fn absorb_prob_black_real(state: UrnState) -> Result<f64> {
    if state.total() <= DEFAULT_EXACT_LIMIT {
        return absorb_prob_black(state).map(|p| real(&p));
    }
    absorb_prob_black_f64(state)
}

/// Log-space evaluation of the partial binomial sum.
pub fn absorb_prob_black_f64(state: UrnState) -> Result<f64> {
    state.require_live()?;
    if state.white == 0 {
        return Ok(1.0);
    }
    if state.black == 0 {
        return Ok(0.0);
    }
    let top = state.total() - 1;
    // the smaller tail is summed directly, the larger one by complement
    if state.black <= state.white {
        Ok(exact::binomial_mass_real(top, 0, state.black as i64 - 1))
    } else {
        Ok(1.0 - exact::binomial_mass_real(top, state.black as i64, top as i64))
    }
}

pub fn expected_final_black_real(state: UrnState) -> Result<f64> {
    Ok(absorb_prob_black_real(state)? * state.total() as f64)
}

/// `T(w, b)` in floating point; exact below [`DEFAULT_EXACT_LIMIT`].
pub fn expected_time_real(state: UrnState) -> Result<f64> {
    if state.total() <= DEFAULT_EXACT_LIMIT {
        return expected_time(state).map(|t| real(&t));
    }
    expected_time_f64(state)
}

/// Floating evaluation of the same double sum with compensated summation.
pub fn expected_time_f64(state: UrnState) -> Result<f64> {
    state.require_live()?;
    let m = state.white.min(state.black) as i64;
    if m == 0 {
        return Ok(0.0);
    }
    let n = state.total() as i64;
    let l = n - 2;
    let top = l / 2;
    let mut s = if l % 2 == 0 { 1.0 } else { 2.0 };
    let mut acc = CompensatedSum::default();
    for i in (0..=top).rev() {
        if i < top {
            s = 2.0 + s * (i + 1) as f64 / (l - i) as f64;
        }
        if i < m {
            acc.add(s / (n - 1 - i) as f64);
        }
    }
    Ok(acc.value() * n as f64 / 2.0)
}

/// Up-step probabilities of the conditioned chain, `up[n]` for `n = 1..N-1`
/// (entry 0 unused). Exact below [`DEFAULT_EXACT_LIMIT`].
pub fn conditional_up_probabilities(total: u64) -> Result<Vec<f64>> {
    if total == 0 {
        return Err(Error::OutOfRange("need at least one ball".into()));
    }
    let mut up = vec![0.0; total as usize];
    if total <= DEFAULT_EXACT_LIMIT {
        let table = HarmonicTable::new(total)?;
        for n in 1..total {
            let p = ratio(n as i64, total as i64) * table.get(n + 1) / table.get(n);
            up[n as usize] = real(&p);
        }
        return Ok(up);
    }
    let nn = total as f64;
    let half = total / 2;
    // upper half: h(n+1)/h(n) = 1 + m(n)/h(n) with m(i) = 2^{-(N-1)} C(N-1, i)
    // and h(n) = 1 - sum_{i>=n} m(i); the tail is at most 1/2 there
    let top = total - 1;
    let mut mass = vec![0.0f64; (top - half + 1) as usize];
    let mut m = (ln_binomial(top, half as i64) - top as f64 * std::f64::consts::LN_2).exp();
    for (j, slot) in mass.iter_mut().enumerate() {
        *slot = m;
        let i = half + j as u64;
        m *= (top - i) as f64 / (i + 1) as f64;
    }
    let mut tail = CompensatedSum::default();
    for n in (half + 1..total).rev() {
        let mn = mass[(n - half) as usize];
        tail.add(mn);
        let h = 1.0 - tail.value();
        up[n as usize] = (n as f64 / nn * (1.0 + mn / h)).min(1.0);
    }
    // lower half: g(n) = sum_{i<n} C(N-1,i) / C(N-1,n-1), g(1) = 1,
    // g(n+1) = 1 + g(n) n / (N-n); then h(n+1)/h(n) = 1 + (N-n) / (n g(n))
    let mut g = 1.0f64;
    for n in 1..=half.min(total - 1) {
        if n > 1 {
            g = 1.0 + g * (n - 1) as f64 / (total - n + 1) as f64;
        }
        up[n as usize] = (n as f64 / nn * (1.0 + (total - n) as f64 / (n as f64 * g))).min(1.0);
    }
    Ok(up)
}
