//! The urn controlled by Policy A: whenever white balls are at least as
//! many as black ones, remove whites until there is one fewer white than
//! black.
//!
//! From the symmetric state `(k, k)` the expected final black count `v_k`
//! and expected absorption time `t_k` obey
//!
//! ```text
//! v_{k+1} = (1-p_k)/(1+p_k) v_k + (2k+1) 2p_k/(1+p_k),                     v_1 = 1
//! t_{k+1} = (1-p_k)/(1+p_k) t_k + (2k+1) p_k/(1+p_k) sum_{i<k} 1/(2i+1),   t_1 = 0
//! ```
//!
//! with `p_k = 2^{-2k} C(2k, k)`. A general state `(w, b)` with `w < b` is
//! resolved against the symmetric value at `k = floor((w+b)/2)`; see
//! [`PolicyA::final_black`] and [`PolicyA::time`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{binomial_mass_real, binomial_row, central_prob, ratio, ExactRational};
use crate::mprocess::UrnState;
use crate::recursion::Scalar;
use crate::sum::CompensatedSum;

/// `v_k`, `t_k` and `beta_k(k+1)` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyASequences {
    k_max: u64,
    v: Vec<ExactRational>,
    t: Vec<ExactRational>,
    beta_full: Vec<ExactRational>,
}

impl PolicyASequences {
    pub fn new(k_max: u64) -> Self {
        let k_max = k_max.max(1);
        let mut v = vec![BigRational::one()];
        let mut t = vec![BigRational::zero()];
        let mut beta_full = Vec::with_capacity(k_max as usize);
        let mut p = ratio(1, 2);
        let mut odd = BigRational::zero();
        for k in 1..=k_max {
            odd += ratio(1, 2 * k as i64 - 1);
            beta_full.push(&odd / BigInt::from(2));
            if k == k_max {
                break;
            }
            let one = BigRational::one();
            let theta = (&one - &p) / (&one + &p);
            let weight = &p / (&one + &p) * BigInt::from(2 * k + 1);
            let vk = &theta * &v[k as usize - 1] + &weight * BigInt::from(2);
            let tk = &theta * &t[k as usize - 1] + &weight * &odd;
            v.push(vk);
            t.push(tk);
            p *= ratio(2 * k as i64 + 1, 2 * k as i64 + 2);
        }
        Self { k_max, v, t, beta_full }
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    /// `v_k = V^A(k, k)`, `1 <= k <= k_max`.
    pub fn v(&self, k: u64) -> &ExactRational {
        &self.v[k as usize - 1]
    }

    /// `t_k = T^A(k, k)`.
    pub fn t(&self, k: u64) -> &ExactRational {
        &self.t[k as usize - 1]
    }

    /// `beta_k(k+1)`, the half odd harmonic sum.
    pub fn beta_full(&self, k: u64) -> &ExactRational {
        &self.beta_full[k as usize - 1]
    }
}

/// `v_1, ..., v_{k_max}`; element `i` is `v_{i+1}`.
pub fn v_sequence(k_max: u64) -> Vec<ExactRational> {
    PolicyASequences::new(k_max).v
}

/// `t_1, ..., t_{k_max}`; element `i` is `t_{i+1}`.
pub fn t_sequence(k_max: u64) -> Vec<ExactRational> {
    PolicyASequences::new(k_max).t
}

/// `sum_{i=k+1}^{k+n-1} sum_{j=k}^{i-1} C(top, i) / C(top-1, j)` for every
/// `n = 0..=n_max`. The inner sum `G(i)` obeys
/// `G(i+1) = G(i) (top-i)/(i+1) + top/(i+1)`, `G(k) = 0`.
fn ratio_double_sums<T: Scalar>(top: i64, k: i64, n_max: i64, frac: impl Fn(i64, i64) -> T) -> Vec<T> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(T::zero());
    if n_max == 0 {
        return out;
    }
    out.push(T::zero());
    let mut g = T::zero();
    let mut acc = T::zero();
    for i in k..k + n_max - 1 {
        // advance G from i to i+1, then include it
        g = g * frac(top - i, i + 1) + frac(top, i + 1);
        acc = acc + g.clone();
        out.push(acc.clone());
    }
    out
}

/// `alpha_k(n)` for `n = 0..=k`.
pub fn alpha_prefix(k: u64) -> Vec<ExactRational> {
    assert!(k >= 1, "k must be positive");
    let k = k as i64;
    let scale = ratio(1, 2 * k - 1);
    ratio_double_sums(2 * k - 1, k, k, ratio).into_iter().map(|x| x * &scale).collect()
}

/// `beta_k(n)` for `n = 0..=k+1`.
pub fn beta_prefix(k: u64) -> Vec<ExactRational> {
    assert!(k >= 1, "k must be positive");
    let k = k as i64;
    let scale = ratio(1, 2 * k);
    ratio_double_sums(2 * k, k, k + 1, ratio).into_iter().map(|x| x * &scale).collect()
}

/// `alpha_k(n) = 1/(2k-1) sum_{i=k+1}^{k+n-1} sum_{j=k}^{i-1} C(2k-1,i)/C(2k-2,j)`, `0 <= n <= k`.
pub fn alpha(k: u64, n: u64) -> Result<ExactRational> {
    if k == 0 || n > k {
        return Err(Error::OutOfRange(format!("alpha needs 1 <= k and n <= k, got k={k}, n={n}")));
    }
    Ok(alpha_prefix(k).swap_remove(n as usize))
}

/// `beta_k(n) = 1/(2k) sum_{i=k+1}^{k+n-1} sum_{j=k}^{i-1} C(2k,i)/C(2k-1,j)`, `0 <= n <= k+1`.
pub fn beta(k: u64, n: u64) -> Result<ExactRational> {
    if k == 0 || n > k + 1 {
        return Err(Error::OutOfRange(format!("beta needs 1 <= k and n <= k+1, got k={k}, n={n}")));
    }
    Ok(beta_prefix(k).swap_remove(n as usize))
}

/// How a state with fewer whites than blacks sits in its band of fixed total.
enum Band {
    /// `(k - c, k + c)`
    Even { k: u64, c: u64 },
    /// `(k + 1 - c, k + c)`
    Odd { k: u64, c: u64 },
}

fn band(state: UrnState) -> Band {
    let n = state.total();
    let k = n / 2;
    if n.is_multiple_of(2) {
        Band::Even { k, c: (state.black - state.white) / 2 }
    } else {
        Band::Odd { k, c: state.black - k }
    }
}

/// Exact evaluator for general states; caches the symmetric sequences.
#[derive(Debug, Clone)]
pub struct PolicyA {
    seq: PolicyASequences,
}

impl PolicyA {
    pub fn new(k_max: u64) -> Self {
        Self { seq: PolicyASequences::new(k_max) }
    }

    /// Large enough for any state with at most `total` balls.
    pub fn for_total(total: u64) -> Self {
        Self::new(total / 2 + 1)
    }

    pub fn sequences(&self) -> &PolicyASequences {
        &self.seq
    }

    fn check(&self, state: UrnState) -> Result<()> {
        if state.total() == 0 {
            return Err(Error::OutOfRange("the urn must hold at least one ball".into()));
        }
        if state.total() / 2 + 1 > self.seq.k_max && state.black.min(state.total() / 2 + 1) > self.seq.k_max {
            return Err(Error::OutOfRange(format!("state {state} needs sequences beyond k = {}", self.seq.k_max)));
        }
        Ok(())
    }

    /// `V^A(w, b)`.
    pub fn final_black(&self, state: UrnState) -> Result<ExactRational> {
        self.check(state)?;
        let UrnState { white, black } = state;
        if black == 0 {
            return Ok(BigRational::zero());
        }
        if white == 0 {
            return Ok(BigRational::from_integer(BigInt::from(black)));
        }
        if white >= black {
            return Ok(self.seq.v(black).clone());
        }
        self.final_black_band(state)
    }

    /// The band formula for `V^A` without the boundary shortcuts; only
    /// meaningful for `w < b`, where it also covers `w = 0`.
    pub fn final_black_band(&self, state: UrnState) -> Result<ExactRational> {
        self.check(state)?;
        Ok(match band(state) {
            Band::Even { k, c } => {
                let vk = self.seq.v(k);
                let w = even_weight(k, c);
                vk + (BigRational::from_integer(BigInt::from(2 * k)) - vk) * w
            }
            Band::Odd { k, c } => {
                let vk = self.seq.v(k);
                let w = odd_weight(k, c);
                vk + (BigRational::from_integer(BigInt::from(2 * k + 1)) - vk) * w
            }
        })
    }

    /// `T^A(w, b)`.
    pub fn time(&self, state: UrnState) -> Result<ExactRational> {
        self.check(state)?;
        let UrnState { white, black } = state;
        if black == 0 || white == 0 {
            return Ok(BigRational::zero());
        }
        if white >= black {
            return Ok(self.seq.t(black).clone());
        }
        self.time_band(state)
    }

    /// The band formula for `T^A`; see [`PolicyA::final_black_band`].
    pub fn time_band(&self, state: UrnState) -> Result<ExactRational> {
        self.check(state)?;
        Ok(match band(state) {
            Band::Even { k, c } => {
                let tk = self.seq.t(k);
                let a = alpha_prefix(k);
                let two_k = BigInt::from(2 * k);
                let full = &a[k as usize] * &two_k;
                tk + (full - tk) * even_weight(k, c) - &a[c as usize] * &two_k
            }
            Band::Odd { k, c } => {
                let tk = self.seq.t(k);
                let b = beta_prefix(k);
                let odd = BigInt::from(2 * k + 1);
                let full = &b[k as usize + 1] * &odd;
                tk + (full - tk) * odd_weight(k, c) - &b[c as usize] * &odd
            }
        })
    }
}

/// `2^{-(2k-2)} sum_{i=k}^{k+c-1} C(2k-1, i)`
fn even_weight(k: u64, c: u64) -> ExactRational {
    let row = binomial_row(2 * k - 1);
    let sum: BigInt = row[k as usize..(k + c) as usize].iter().sum();
    BigRational::new(sum, BigInt::one() << (2 * k - 2) as usize)
}

/// `2^{-(2k-1)} / (1 + p_k) sum_{i=k}^{k+c-1} C(2k, i)`
fn odd_weight(k: u64, c: u64) -> ExactRational {
    let row = binomial_row(2 * k);
    let sum: BigInt = row[k as usize..(k + c) as usize].iter().sum();
    BigRational::new(sum, BigInt::one() << (2 * k - 1) as usize) / (BigRational::one() + central_prob(k))
}

pub fn expected_final_black_a(state: UrnState) -> Result<ExactRational> {
    PolicyA::for_total(state.total()).final_black(state)
}

pub fn expected_time_a(state: UrnState) -> Result<ExactRational> {
    PolicyA::for_total(state.total()).time(state)
}

/// `v_k` and `t_k` in floating point for `k = 1..=k_max` (element `i` is
/// index `k = i + 1`), for `k` far beyond the exact range.
#[derive(Debug, Clone)]
pub struct PolicyAReal {
    v: Vec<f64>,
    t: Vec<f64>,
    p: Vec<f64>,
}

impl PolicyAReal {
    pub fn new(k_max: u64) -> Self {
        let k_max = k_max.max(1) as usize;
        let mut v = Vec::with_capacity(k_max);
        let mut t = Vec::with_capacity(k_max);
        let mut ps = Vec::with_capacity(k_max);
        v.push(1.0);
        t.push(0.0);
        let mut p = 0.5f64;
        let mut odd = CompensatedSum::default();
        for k in 1..=k_max {
            ps.push(p);
            odd.add(1.0 / (2 * k - 1) as f64);
            if k == k_max {
                break;
            }
            let theta = (1.0 - p) / (1.0 + p);
            let weight = (2 * k + 1) as f64 * p / (1.0 + p);
            v.push(theta * v[k - 1] + 2.0 * weight);
            t.push(theta * t[k - 1] + weight * odd.value());
            p *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
        }
        Self { v, t, p: ps }
    }

    pub fn k_max(&self) -> u64 {
        self.v.len() as u64
    }

    pub fn v(&self, k: u64) -> f64 {
        self.v[k as usize - 1]
    }

    pub fn t(&self, k: u64) -> f64 {
        self.t[k as usize - 1]
    }

    /// `V^A(w, b)` in floating point.
    pub fn final_black(&self, state: UrnState) -> Result<f64> {
        let UrnState { white, black } = state;
        self.check(state)?;
        if black == 0 {
            return Ok(0.0);
        }
        if white == 0 {
            return Ok(black as f64);
        }
        if white >= black {
            return Ok(self.v(black));
        }
        Ok(match band(state) {
            Band::Even { k, c } => {
                let vk = self.v(k);
                vk + ((2 * k) as f64 - vk) * self.even_weight(k, c)
            }
            Band::Odd { k, c } => {
                let vk = self.v(k);
                vk + ((2 * k + 1) as f64 - vk) * self.odd_weight(k, c)
            }
        })
    }

    /// `T^A(w, b)` in floating point.
    pub fn time(&self, state: UrnState) -> Result<f64> {
        let UrnState { white, black } = state;
        self.check(state)?;
        if black == 0 || white == 0 {
            return Ok(0.0);
        }
        if white >= black {
            return Ok(self.t(black));
        }
        let frac = |n: i64, d: i64| n as f64 / d as f64;
        Ok(match band(state) {
            Band::Even { k, c } => {
                let ki = k as i64;
                let sums = ratio_double_sums(2 * ki - 1, ki, ki, frac);
                let scale = (2 * k) as f64 / (2 * k - 1) as f64;
                let tk = self.t(k);
                tk + (scale * sums[k as usize] - tk) * self.even_weight(k, c) - scale * sums[c as usize]
            }
            Band::Odd { k, c } => {
                let ki = k as i64;
                let sums = ratio_double_sums(2 * ki, ki, ki + 1, frac);
                let scale = (2 * k + 1) as f64 / (2 * k) as f64;
                let tk = self.t(k);
                tk + (scale * sums[k as usize + 1] - tk) * self.odd_weight(k, c) - scale * sums[c as usize]
            }
        })
    }

    fn check(&self, state: UrnState) -> Result<()> {
        if state.total() == 0 {
            return Err(Error::OutOfRange("the urn must hold at least one ball".into()));
        }
        let needed = if state.white >= state.black { state.black } else { state.total() / 2 };
        if needed > self.k_max() {
            return Err(Error::OutOfRange(format!("state {state} needs sequences beyond k = {}", self.k_max())));
        }
        Ok(())
    }

    fn even_weight(&self, k: u64, c: u64) -> f64 {
        4.0 * binomial_mass_real(2 * k - 1, k as i64, (k + c) as i64 - 1) / 2.0
    }

    fn odd_weight(&self, k: u64, c: u64) -> f64 {
        2.0 * binomial_mass_real(2 * k, k as i64, (k + c) as i64 - 1) / (1.0 + self.p[k as usize - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{binomial, real};
    use crate::identities::half_odd_harmonic;

    fn s(w: u64, b: u64) -> UrnState {
        UrnState::new(w, b)
    }

    #[test]
    fn sequence_values() {
        let seq = PolicyASequences::new(5);
        assert_eq!(seq.v(1), &ratio(1, 1));
        assert_eq!(seq.v(2), &ratio(7, 3));
        assert_eq!(seq.v(3), &ratio(125, 33));
        assert_eq!(seq.t(1), &ratio(0, 1));
        assert_eq!(seq.t(2), &ratio(1, 1));
        assert_eq!(seq.t(3), &ratio(25, 11));
        assert_eq!(v_sequence(3), vec![ratio(1, 1), ratio(7, 3), ratio(125, 33)]);
        assert_eq!(t_sequence(3)[2], ratio(25, 11));
    }

    #[test]
    fn sequences_are_monotone() {
        let seq = PolicyASequences::new(100);
        for k in 1..100 {
            assert!(seq.v(k + 1) > seq.v(k));
            assert!(seq.t(k + 1) >= seq.t(k));
            // never worse than leaving the urn alone, V(k,k) = k
            assert!(seq.v(k) >= &ratio(k as i64, 1));
        }
    }

    fn literal(scale: i64, top: u64, k: i64, n: i64) -> ExactRational {
        let mut acc = BigRational::zero();
        for i in k + 1..=k + n - 1 {
            for j in k..i {
                acc += BigRational::new(binomial(top, i), binomial(top - 1, j));
            }
        }
        acc / BigInt::from(scale)
    }

    #[test]
    fn alpha_beta_match_literal_sums() {
        for k in 1..=14u64 {
            let a = alpha_prefix(k);
            let b = beta_prefix(k);
            let ki = k as i64;
            for n in 0..=ki {
                assert_eq!(a[n as usize], literal(2 * ki - 1, 2 * k - 1, ki, n), "alpha k={k} n={n}");
            }
            for n in 0..=ki + 1 {
                assert_eq!(b[n as usize], literal(2 * ki, 2 * k, ki, n), "beta k={k} n={n}");
            }
        }
    }

    #[test]
    fn alpha_beta_spot_values() {
        for k in 1..10 {
            assert_eq!(alpha(k, 1).unwrap(), ratio(0, 1));
            assert_eq!(beta(k, 1).unwrap(), ratio(0, 1));
        }
        assert_eq!(alpha(2, 2).unwrap(), ratio(1, 3));
        assert_eq!(beta(1, 2).unwrap(), ratio(1, 2));
        assert_eq!(beta(2, 3).unwrap(), ratio(2, 3));
        assert!(alpha(2, 3).is_err());
        assert!(beta(2, 4).is_err());
        assert!(alpha(0, 0).is_err());
    }

    #[test]
    fn beta_full_is_half_odd_harmonic() {
        let seq = PolicyASequences::new(50);
        for k in 1..=50 {
            let direct = beta(k, k + 1).unwrap();
            assert_eq!(direct, half_odd_harmonic(k));
            assert_eq!(seq.beta_full(k), &direct);
        }
    }

    #[test]
    fn time_recursion_with_double_sum_beta() {
        // t_{k+1} = theta t_k + (2k+1) beta_k(k+1) 2p/(1+p), beta from the double sum
        let seq = PolicyASequences::new(50);
        for k in 1..50u64 {
            let p = central_prob(k);
            let one = BigRational::one();
            let theta = (&one - &p) / (&one + &p);
            let next = theta * seq.t(k) + beta(k, k + 1).unwrap() * &p * BigInt::from(2 * (2 * k + 1)) / (&one + &p);
            assert_eq!(&next, seq.t(k + 1));
        }
    }

    #[test]
    fn alpha_full_closed_form() {
        // 2k alpha_k(k) against the second binomial identity: the off-centre
        // sum plus the lower half gives T(k,k)/... ; checked through T^A(0,2k) = 0
        for k in 2..=30u64 {
            let pa = PolicyA::new(k + 1);
            assert_eq!(pa.time(s(0, 2 * k)).unwrap(), ratio(0, 1));
        }
    }

    #[test]
    fn general_state_examples() {
        let pa = PolicyA::new(10);
        assert_eq!(pa.final_black(s(1, 2)).unwrap(), ratio(7, 3));
        assert_eq!(pa.final_black(s(2, 2)).unwrap(), ratio(7, 3));
        assert_eq!(pa.time(s(1, 2)).unwrap(), ratio(1, 1));
        assert_eq!(pa.time(s(2, 2)).unwrap(), ratio(1, 1));
        assert_eq!(pa.final_black(s(5, 5)).unwrap(), pa.sequences().v(5).clone());
        assert_eq!(pa.final_black(s(9, 5)).unwrap(), pa.sequences().v(5).clone());
        assert_eq!(pa.time(s(9, 5)).unwrap(), pa.sequences().t(5).clone());
        assert_eq!(pa.final_black(s(4, 0)).unwrap(), ratio(0, 1));
        assert_eq!(pa.final_black(s(0, 7)).unwrap(), ratio(7, 1));
        assert!(pa.final_black(s(0, 0)).is_err());
    }

    #[test]
    fn all_black_boundary_telescopes() {
        let pa = PolicyA::new(101);
        for k in 1..=100u64 {
            // the c = k end of the even band
            let v = pa.sequences().v(k);
            let top = BigRational::from_integer(BigInt::from(2 * k));
            assert_eq!(v + (&top - v) * even_weight(k, k), top);
            assert_eq!(pa.final_black_band(s(0, 2 * k)).unwrap(), top);
            assert_eq!(pa.time_band(s(0, 2 * k)).unwrap(), ratio(0, 1));
        }
    }

    #[test]
    fn symmetric_step_via_band_formula() {
        // (k+1, k+1) reduces to (k, k+1), the c = 1 point of the odd band
        let pa = PolicyA::new(40);
        for k in 1..39u64 {
            assert_eq!(pa.final_black(s(k, k + 1)).unwrap(), pa.sequences().v(k + 1).clone());
            assert_eq!(pa.time(s(k, k + 1)).unwrap(), pa.sequences().t(k + 1).clone());
        }
    }

    #[test]
    fn float_evaluator_tracks_exact() {
        let exact = PolicyA::new(160);
        let float = PolicyAReal::new(160);
        for k in [1u64, 2, 10, 77, 150] {
            assert!((real(exact.sequences().v(k)) - float.v(k)).abs() < 1e-11 * k as f64);
            assert!((real(exact.sequences().t(k)) - float.t(k)).abs() < 1e-11 * k as f64);
        }
        for st in [s(3, 5), s(10, 11), s(40, 90), s(1, 150), s(100, 201), s(150, 150), s(57, 60)] {
            let e = real(&exact.final_black(st).unwrap());
            let f = float.final_black(st).unwrap();
            assert!((e - f).abs() < 1e-10 * e.max(1.0), "{st}: {e} vs {f}");
            let e = real(&exact.time(st).unwrap());
            let f = float.time(st).unwrap();
            assert!((e - f).abs() < 1e-10 * e.max(1.0), "{st}: {e} vs {f}");
        }
    }
}
