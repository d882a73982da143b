//! White-ball removal strategies and their exact evaluation.
//!
//! A strategy maps the current state to a number of white balls to remove.
//! Removal happens at time zero and right after every draw, costs no draw and
//! no discount. The dynamic program [`exact_value_under_strategy`] works over
//! decreasing totals: draws keep the total fixed, removals lower it, so the
//! uncontrolled states of one total form birth-death bands whose boundaries
//! are absorbing states or controlled states already resolved in a smaller
//! total.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{binomial, ceil, in_open_unit, parse_rational, ratio, ExactRational};
use crate::mprocess::UrnState;
use crate::recursion::{
    brute_force_values, solve_discounted_all, BirthDeath, ChainQuantity, ChainSpec, RecursionProblem, Scalar,
};

/// Largest total handled by the exact dynamic program.
pub const EXACT_TOTAL_LIMIT: u64 = 3000;

/// Removal rule `max(W + B - ceil(B/q) + 1, 0)`: keep the chance of drawing
/// black strictly above `q` after every removal.
#[derive(Clone, PartialEq)]
pub struct Threshold {
    q: ExactRational,
    /// `q = num/den` when both fit in 64 bits; used on the simulation hot path
    small: Option<(u128, u128)>,
}

impl Threshold {
    pub fn new(q: ExactRational) -> Result<Self> {
        if !in_open_unit(&q) {
            return Err(Error::InvalidStrategy(format!("threshold q = {q} must lie in (0, 1)")));
        }
        let small = match (q.numer().to_u64(), q.denom().to_u64()) {
            (Some(n), Some(d)) => Some((n as u128, d as u128)),
            _ => None,
        };
        Ok(Self { q, small })
    }

    pub fn q(&self) -> &ExactRational {
        &self.q
    }

    pub fn removal(&self, state: UrnState) -> u64 {
        if state.black == 0 {
            return 0;
        }
        let ceil_b_over_q: u128 = match self.small {
            Some((n, d)) => (state.black as u128 * d).div_ceil(n),
            None => {
                let x = BigRational::from_integer(BigInt::from(state.black)) / &self.q;
                ceil(&x).to_u128().unwrap_or(u128::MAX)
            }
        };
        let keep = state.total() as u128 + 1;
        if keep <= ceil_b_over_q {
            0
        } else {
            ((keep - ceil_b_over_q) as u64).min(state.white)
        }
    }
}

impl fmt::Debug for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Threshold({})", self.q)
    }
}

pub type RemovalFn = dyn Fn(UrnState) -> u64 + Send + Sync;

/// A user supplied removal rule.
#[derive(Clone)]
pub struct CustomStrategy {
    name: String,
    removal: Arc<RemovalFn>,
}

impl CustomStrategy {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum StrategySpec {
    /// Never remove anything.
    None,
    /// Keep whites at most one below blacks.
    PolicyA,
    /// Remove every white ball at once.
    PolicyR,
    Threshold(Threshold),
    Custom(CustomStrategy),
}

/// Totals on which custom strategies are checked at construction.
const CUSTOM_CHECK_TOTAL: u64 = 64;

impl StrategySpec {
    pub fn threshold(q: ExactRational) -> Result<Self> {
        Threshold::new(q).map(Self::Threshold)
    }

    /// Wraps a removal function. It is checked never to remove more whites
    /// than present on every state with at most 64 balls; larger requests
    /// elsewhere are clamped.
    pub fn custom(name: impl Into<String>, removal: impl Fn(UrnState) -> u64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        for total in 0..=CUSTOM_CHECK_TOTAL {
            for black in 0..=total {
                let s = UrnState::new(total - black, black);
                let r = removal(s);
                if r > s.white {
                    return Err(Error::InvalidStrategy(format!(
                        "custom strategy {name:?} removes {r} whites from {s}"
                    )));
                }
            }
        }
        Ok(Self::Custom(CustomStrategy { name, removal: Arc::new(removal) }))
    }

    /// Number of white balls removed in `state`; zero once the urn is absorbed.
    pub fn removal(&self, state: UrnState) -> u64 {
        if state.black == 0 {
            return 0;
        }
        match self {
            Self::None => 0,
            Self::PolicyA => (state.white + 1).saturating_sub(state.black),
            Self::PolicyR => state.white,
            Self::Threshold(t) => t.removal(state),
            Self::Custom(c) => (c.removal)(state).min(state.white),
        }
    }

    pub fn apply(&self, state: UrnState) -> UrnState {
        UrnState::new(state.white - self.removal(state), state.black)
    }

    /// Whether this rule acts identically to Policy A on every state.
    pub fn is_policy_a(&self) -> bool {
        match self {
            Self::PolicyA => true,
            Self::Threshold(t) => t.q == ratio(1, 2),
            _ => false,
        }
    }

    /// `none`, `A`, `R`, `q:<rational>` or `custom:<name>`.
    pub fn label(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::PolicyA => "A".into(),
            Self::PolicyR => "R".into(),
            Self::Threshold(t) => format!("q:{}", t.q),
            Self::Custom(c) => format!("custom:{}", c.name),
        }
    }
}

impl PartialEq for StrategySpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::None, Self::None) | (Self::PolicyA, Self::PolicyA) | (Self::PolicyR, Self::PolicyR) => true,
            (Self::Threshold(a), Self::Threshold(b)) => a == b,
            (Self::Custom(a), Self::Custom(b)) => Arc::ptr_eq(&a.removal, &b.removal),
            _ => false,
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Self::None),
            "A" | "a" => Ok(Self::PolicyA),
            "R" | "r" => Ok(Self::PolicyR),
            other => match other.strip_prefix("q:") {
                Some(q) => Self::threshold(parse_rational(q)?),
                None => Err(Error::InvalidStrategy(format!("expected none, A, R or q:<rational>, got {other:?}"))),
            },
        }
    }
}

/// `phi(k) = ceil(k (1-q)/q)`, the fewest whites that trigger a removal when
/// `k` blacks are present.
pub fn phi(k: u64, q: &ExactRational) -> Result<u64> {
    if !in_open_unit(q) {
        return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
    }
    let x = BigRational::from_integer(BigInt::from(k)) * (BigRational::one() - q) / q;
    ceil(&x).to_u64().ok_or(Error::Overflow)
}

/// Whites removed by the `q`-strategy in `state`.
pub fn removal_count(state: UrnState, q: &ExactRational) -> Result<u64> {
    Ok(Threshold::new(q.clone())?.removal(state))
}

fn check_upper_half(q: &ExactRational) -> Result<()> {
    if q < &ratio(1, 2) || q >= &BigRational::one() {
        return Err(Error::OutOfRange(format!("the q-recursion needs 1/2 <= q < 1, got {q}")));
    }
    Ok(())
}

/// `p_k^q = C(M, k) / (2 sum_{j=k}^{M} C(M, j) - C(M, k))` with
/// `M = phi(k+1) + k - 1`.
pub fn p_q(k: u64, q: &ExactRational) -> Result<ExactRational> {
    check_upper_half(q)?;
    if k == 0 {
        return Err(Error::OutOfRange("k must be positive".into()));
    }
    let m = phi(k + 1, q)? + k - 1;
    let c = binomial(m, k as i64);
    let tail: BigInt = (k..=m).map(|j| binomial(m, j as i64)).sum();
    Ok(BigRational::new(c.clone(), tail * 2 - c))
}

/// `V^q(phi(k), k)` for `k = 1..=k_max` (element `i` is `k = i + 1`):
/// `V_{k+1} = (1-p)/(1+p) V_k + (phi(k+1) + k) 2p/(1+p)`, `V_1 = 1`.
pub fn v_q_sequence(k_max: u64, q: &ExactRational) -> Result<Vec<ExactRational>> {
    check_upper_half(q)?;
    let mut out = vec![BigRational::one()];
    for k in 1..k_max {
        let p = p_q(k, q)?;
        let one = BigRational::one();
        let top = BigInt::from(phi(k + 1, q)? + k);
        let next = (&one - &p) / (&one + &p) * &out[k as usize - 1] + &p * BigInt::from(2) * top / (&one + &p);
        out.push(next);
    }
    Ok(out)
}

/// What the dynamic program evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// `E[B_H]`
    FinalBlack,
    /// `E[H]`
    Time,
    /// `E[e^{-mu H} B_H]` with rate `mu >= 0`
    Discounted(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyValue {
    Exact(ExactRational),
    Real(f64),
}

impl StrategyValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Exact(x) => crate::exact::to_real(x).unwrap_or(f64::INFINITY),
            Self::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&ExactRational> {
        match self {
            Self::Exact(x) => Some(x),
            Self::Real(_) => None,
        }
    }
}

/// Evaluates `quantity` from `state` under `strategy`. Final black count,
/// time, and discounting at `mu = 0` are exact; positive `mu` runs in `f64`
/// with per-step factor `e^{-mu}`.
pub fn exact_value_under_strategy(state: UrnState, strategy: &StrategySpec, quantity: Quantity) -> Result<StrategyValue> {
    match quantity {
        Quantity::FinalBlack => final_black_under(state, strategy).map(StrategyValue::Exact),
        Quantity::Time => time_under(state, strategy).map(StrategyValue::Exact),
        Quantity::Discounted(0.0) => {
            discounted_under_exact(state, strategy, &BigRational::one()).map(StrategyValue::Exact)
        }
        Quantity::Discounted(mu) => discounted_under(state, strategy, mu).map(StrategyValue::Real),
    }
}

pub fn final_black_under(state: UrnState, strategy: &StrategySpec) -> Result<ExactRational> {
    let lift = |n: u64| BigRational::from_integer(BigInt::from(n));
    dp(state, strategy, &Mode { cost: BigRational::zero(), pay_black: true, discount: None }, lift)
}

pub fn time_under(state: UrnState, strategy: &StrategySpec) -> Result<ExactRational> {
    let lift = |n: u64| BigRational::from_integer(BigInt::from(n));
    dp(state, strategy, &Mode { cost: BigRational::one(), pay_black: false, discount: None }, lift)
}

/// `E[d^H B_H]` for an exact per-step factor `0 < d <= 1`.
pub fn discounted_under_exact(state: UrnState, strategy: &StrategySpec, factor: &ExactRational) -> Result<ExactRational> {
    if !(factor > &BigRational::zero() && factor <= &BigRational::one()) {
        return Err(Error::InvalidDiscount(factor.to_string()));
    }
    let lift = |n: u64| BigRational::from_integer(BigInt::from(n));
    let mode = Mode { cost: BigRational::zero(), pay_black: true, discount: Some(factor.clone()) };
    dp(state, strategy, &mode, lift)
}

/// `E[e^{-mu H} B_H]` in floating point.
pub fn discounted_under(state: UrnState, strategy: &StrategySpec, mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidDiscount(format!("rate {mu}")));
    }
    let mode = Mode { cost: 0.0, pay_black: true, discount: Some((-mu).exp()) };
    dp(state, strategy, &mode, |n| n as f64)
}

struct Mode<T> {
    cost: T,
    /// terminal payoff is the black count (otherwise zero)
    pay_black: bool,
    discount: Option<T>,
}

fn dp<T: Scalar>(start: UrnState, strategy: &StrategySpec, mode: &Mode<T>, lift: impl Fn(u64) -> T) -> Result<T> {
    if start.total() == 0 {
        return Err(Error::OutOfRange("the urn must hold at least one ball".into()));
    }
    if start.total() > EXACT_TOTAL_LIMIT {
        return Err(Error::StateSpaceTooLarge { total: start.total(), limit: EXACT_TOTAL_LIMIT });
    }
    let first = strategy.apply(start);
    let top = first.total();

    // totals reachable from the start, found top-down
    let mut needed = vec![false; top as usize + 1];
    needed[top as usize] = true;
    for n in (1..=top).rev() {
        if !needed[n as usize] {
            continue;
        }
        for b in 1..n {
            let s = UrnState::new(n - b, b);
            if strategy.removal(s) > 0 {
                needed[strategy.apply(s).total() as usize] = true;
            }
        }
    }

    let payoff = |b: u64| if mode.pay_black { lift(b) } else { T::zero() };
    // draw-values W indexed by black count, per total
    let mut solved: BTreeMap<u64, Vec<T>> = BTreeMap::new();
    for n in 1..=top {
        if !needed[n as usize] {
            continue;
        }
        let mut value: Vec<Option<T>> = vec![None; n as usize + 1];
        value[0] = Some(payoff(0));
        value[n as usize] = Some(payoff(n));
        for b in 1..n {
            let s = UrnState::new(n - b, b);
            if strategy.removal(s) > 0 {
                let t = strategy.apply(s);
                value[b as usize] = Some(solved[&t.total()][t.black as usize].clone());
            }
        }
        let down = |b: i64| lift(n - b as u64) / lift(n);
        let mut lo = 0usize;
        while lo < n as usize {
            let mut hi = lo + 1;
            while value[hi].is_none() {
                hi += 1;
            }
            if hi > lo + 1 {
                let chain = BirthDeath::new(lo as i64, hi as i64, down)?;
                let left = value[lo].clone().unwrap();
                let right = value[hi].clone().unwrap();
                let band = match &mode.discount {
                    Some(d) => solve_discounted_all(&chain, d.clone(), left, right)?,
                    None => RecursionProblem::from_chain(chain, |_| mode.cost.clone(), left, right).solve_all(),
                };
                for (offset, x) in band.into_iter().enumerate() {
                    value[lo + offset] = Some(x);
                }
            }
            lo = hi;
        }
        let value: Vec<T> = value.into_iter().map(|x| x.unwrap()).collect();
        // draw from every state, including controlled ones a removal might land on
        let mut draw = value.clone();
        for b in 1..n {
            let s = UrnState::new(n - b, b);
            if strategy.removal(s) > 0 {
                let p = down(b as i64);
                let step = p.clone() * value[b as usize - 1].clone() + (T::one() - p) * value[b as usize + 1].clone();
                draw[b as usize] = match &mode.discount {
                    Some(d) => d.clone() * step,
                    None => mode.cost.clone() + step,
                };
            }
        }
        solved.insert(n, draw);
    }
    Ok(solved[&top][first.black as usize].clone())
}

/// Reference value from the full absorbing chain on all states with at most
/// the post-removal start total, solved by exact elimination. With a
/// `discount` factor `d`, each draw survives with probability `d` and
/// otherwise moves to a zero-payoff cemetery, so the terminal payoff becomes
/// `E[d^H B_H]`.
pub fn brute_force_under_strategy(
    state: UrnState,
    strategy: &StrategySpec,
    quantity: ChainQuantity,
    discount: Option<&ExactRational>,
) -> Result<ExactRational> {
    if state.total() == 0 {
        return Err(Error::OutOfRange("the urn must hold at least one ball".into()));
    }
    let first = strategy.apply(state);
    let top = first.total();
    // states ordered by descending total so removals point forward
    let mut states = Vec::new();
    for n in (1..=top).rev() {
        for b in 0..=n {
            states.push(UrnState::new(n - b, b));
        }
    }
    let index: std::collections::HashMap<UrnState, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let cemetery = states.len();
    let n_states = states.len() + usize::from(discount.is_some());
    let d = discount.cloned().unwrap_or_else(BigRational::one);
    let chain = ChainSpec::new(
        n_states,
        |i| {
            let s = states[i];
            let n = s.total() as i64;
            let up = UrnState::new(s.white - 1, s.black + 1);
            let down = UrnState::new(s.white + 1, s.black - 1);
            let mut row = vec![
                (index[&strategy.apply(up)], &d * ratio(s.black as i64, n)),
                (index[&strategy.apply(down)], &d * ratio(s.white as i64, n)),
            ];
            if discount.is_some() {
                row.push((cemetery, BigRational::one() - &d));
            }
            row
        },
        |i| i == cemetery || states[i].is_absorbing(),
        |_| BigRational::one(),
        |i| {
            if i == cemetery {
                BigRational::zero()
            } else {
                BigRational::from_integer(BigInt::from(states[i].black))
            }
        },
    )?;
    let values = brute_force_values(&chain, quantity)?;
    Ok(values[index[&first]].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apolicy::PolicyA;
    use crate::exact::central_prob;
    use crate::mprocess::{expected_final_black, expected_time};
    use proptest::prelude::*;

    fn s(w: u64, b: u64) -> UrnState {
        UrnState::new(w, b)
    }

    fn q(x: &str) -> ExactRational {
        parse_rational(x).unwrap()
    }

    #[test]
    fn phi_examples() {
        for k in 1..50 {
            assert_eq!(phi(k, &ratio(1, 2)).unwrap(), k);
        }
        assert_eq!(phi(3, &ratio(2, 3)).unwrap(), 2);
        assert_eq!(phi(1, &q("0.9")).unwrap(), 1);
        assert_eq!(phi(4, &ratio(2, 3)).unwrap(), 2);
        assert_eq!(phi(5, &ratio(2, 3)).unwrap(), 3);
        assert!(phi(1, &ratio(1, 1)).is_err());
    }

    #[test]
    fn removal_examples() {
        let half = ratio(1, 2);
        assert_eq!(removal_count(s(2, 2), &half).unwrap(), 1);
        assert_eq!(removal_count(s(1, 2), &half).unwrap(), 0);
        assert_eq!(removal_count(s(5, 0), &half).unwrap(), 0);
        // exact multiple: B/q integral must not round up
        assert_eq!(removal_count(s(1, 2), &ratio(2, 3)).unwrap(), 1);
        assert_eq!(removal_count(s(0, 2), &ratio(2, 3)).unwrap(), 0);
        let r = StrategySpec::PolicyR;
        for (w, b) in [(0, 3), (4, 1), (9, 9)] {
            assert_eq!(r.removal(s(w, b)), w);
        }
    }

    #[test]
    fn threshold_big_rational_path() {
        let big = q("500000000000000000000000001/1000000000000000000000000000");
        let t = Threshold::new(big.clone()).unwrap();
        assert!(t.small.is_none());
        for (w, b) in [(3, 3), (10, 11), (11, 10), (0, 5)] {
            let x = BigRational::from_integer(BigInt::from(b)) / &big;
            let expect = (BigInt::from(w + b + 1) - ceil(&x)).max(BigInt::zero()).to_u64().unwrap().min(w);
            assert_eq!(t.removal(s(w, b)), expect);
        }
    }

    #[test]
    fn half_threshold_is_policy_a() {
        let half = StrategySpec::threshold(ratio(1, 2)).unwrap();
        for n in 0..=500u64 {
            for b in 0..=n {
                let st = s(n - b, b);
                assert_eq!(half.removal(st), StrategySpec::PolicyA.removal(st), "{st}");
            }
        }
        assert!(half.is_policy_a());
    }

    #[test]
    fn parse_strategies() {
        assert_eq!("none".parse::<StrategySpec>().unwrap(), StrategySpec::None);
        assert_eq!("A".parse::<StrategySpec>().unwrap(), StrategySpec::PolicyA);
        assert_eq!("R".parse::<StrategySpec>().unwrap(), StrategySpec::PolicyR);
        let t: StrategySpec = "q:2/3".parse().unwrap();
        assert_eq!(t.label(), "q:2/3");
        let t: StrategySpec = "q:0.75".parse().unwrap();
        assert_eq!(t.label(), "q:3/4");
        assert!("q:1".parse::<StrategySpec>().is_err());
        assert!("q:0".parse::<StrategySpec>().is_err());
        assert!("B".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(StrategySpec::custom("too greedy", |st: UrnState| st.white + 1).is_err());
        let half_whites = StrategySpec::custom("half", |st: UrnState| st.white / 2).unwrap();
        assert_eq!(half_whites.removal(s(7, 3)), 3);
        assert_eq!(half_whites.label(), "custom:half");
    }

    #[test]
    fn p_q_at_half_is_central_prob() {
        let half = ratio(1, 2);
        for k in 1..=50 {
            assert_eq!(p_q(k, &half).unwrap(), central_prob(k));
        }
        assert_eq!(p_q(1, &ratio(2, 3)).unwrap(), ratio(1, 1));
        assert!(p_q(1, &ratio(1, 3)).is_err());
    }

    #[test]
    fn v_q_at_half_is_v() {
        let pa = PolicyA::new(30);
        let vq = v_q_sequence(30, &ratio(1, 2)).unwrap();
        for k in 1..=30u64 {
            assert_eq!(&vq[k as usize - 1], pa.sequences().v(k));
        }
        for x in ["3/5", "2/3", "0.99"] {
            assert_eq!(v_q_sequence(1, &q(x)).unwrap(), vec![ratio(1, 1)]);
        }
    }

    #[test]
    fn p_q_is_one_cycle_ratio() {
        // from (phi(k+1)-1, k+1) the chance of reaching all-black before
        // dropping to k blacks, written as 2p/(1+p)
        let q23 = ratio(2, 3);
        let k = 4u64;
        let p = p_q(k, &q23).unwrap();
        let w = phi(k + 1, &q23).unwrap() - 1;
        let n = w + k + 1;
        // two-sided hitting probability by gambler's ruin on the uncontrolled chain
        let problem = RecursionProblem::new(
            k as i64,
            n as i64,
            |b| ratio((n - b as u64) as i64, n as i64),
            |_| BigRational::zero(),
            BigRational::zero(),
            BigRational::one(),
        )
        .unwrap();
        let hit = problem.solve_boundary(k as i64 + 1).unwrap();
        assert_eq!(hit, &p * BigInt::from(2) / (BigRational::one() + &p));
    }

    #[test]
    fn v_q_matches_dp() {
        for x in ["1/2", "3/5", "2/3", "3/4"] {
            let qq = q(x);
            let strat = StrategySpec::threshold(qq.clone()).unwrap();
            let seq = v_q_sequence(20, &qq).unwrap();
            for k in 1..=20u64 {
                let st = s(phi(k, &qq).unwrap(), k);
                assert_eq!(final_black_under(st, &strat).unwrap(), seq[k as usize - 1], "q={x} k={k}");
            }
        }
    }

    #[test]
    fn trivial_strategies() {
        for (w, b) in [(3, 4), (10, 2), (1, 1)] {
            let st = s(w, b);
            assert_eq!(final_black_under(st, &StrategySpec::PolicyR).unwrap(), ratio(b as i64, 1));
            assert_eq!(time_under(st, &StrategySpec::PolicyR).unwrap(), ratio(0, 1));
            assert_eq!(discounted_under(st, &StrategySpec::PolicyR, 0.3).unwrap(), b as f64);
            assert_eq!(final_black_under(st, &StrategySpec::None).unwrap(), expected_final_black(st).unwrap());
            assert_eq!(time_under(st, &StrategySpec::None).unwrap(), expected_time(st).unwrap());
        }
        assert_eq!(final_black_under(s(0, 4), &StrategySpec::PolicyA).unwrap(), ratio(4, 1));
        assert_eq!(final_black_under(s(4, 0), &StrategySpec::PolicyA).unwrap(), ratio(0, 1));
        assert!(final_black_under(s(0, 0), &StrategySpec::PolicyA).is_err());
        assert!(matches!(
            time_under(s(2000, 1001), &StrategySpec::None),
            Err(Error::StateSpaceTooLarge { total: 3001, limit: 3000 })
        ));
    }

    #[test]
    fn policy_a_symmetric_values() {
        let pa = PolicyA::new(20);
        for k in 1..=20u64 {
            assert_eq!(&final_black_under(s(k, k), &StrategySpec::PolicyA).unwrap(), pa.sequences().v(k));
            assert_eq!(&time_under(s(k, k), &StrategySpec::PolicyA).unwrap(), pa.sequences().t(k));
        }
    }

    #[test]
    fn dp_matches_brute_force() {
        let strategies = [
            StrategySpec::None,
            StrategySpec::PolicyA,
            StrategySpec::PolicyR,
            StrategySpec::threshold(ratio(2, 3)).unwrap(),
            StrategySpec::threshold(ratio(2, 5)).unwrap(),
            StrategySpec::custom("every other", |st: UrnState| st.white % 2).unwrap(),
        ];
        let d = ratio(9, 10);
        for strat in &strategies {
            for n in 1..=12u64 {
                for b in 0..=n {
                    let st = s(n - b, b);
                    let fb = brute_force_under_strategy(st, strat, ChainQuantity::TerminalPayoff, None).unwrap();
                    assert_eq!(final_black_under(st, strat).unwrap(), fb, "{strat} {st}");
                    let t = brute_force_under_strategy(st, strat, ChainQuantity::TotalCost, None).unwrap();
                    assert_eq!(time_under(st, strat).unwrap(), t, "{strat} {st}");
                    let disc = brute_force_under_strategy(st, strat, ChainQuantity::TerminalPayoff, Some(&d)).unwrap();
                    assert_eq!(discounted_under_exact(st, strat, &d).unwrap(), disc, "{strat} {st}");
                }
            }
        }
    }

    #[test]
    fn float_discount_tracks_exact() {
        let strat = StrategySpec::threshold(ratio(3, 5)).unwrap();
        let mu = 0.05f64;
        // exact factor close to e^{-mu}
        let d = BigRational::from_float((-mu).exp()).unwrap();
        let exact = discounted_under_exact(s(12, 9), &strat, &d).unwrap();
        let float = discounted_under(s(12, 9), &strat, mu).unwrap();
        assert!((crate::exact::real(&exact) - float).abs() < 1e-12);
        assert!(discounted_under(s(1, 1), &strat, -1.0).is_err());
        assert!(discounted_under(s(1, 1), &strat, f64::NAN).is_err());
    }

    #[test]
    fn quantity_dispatch() {
        let st = s(3, 3);
        let a = StrategySpec::PolicyA;
        assert_eq!(
            exact_value_under_strategy(st, &a, Quantity::Discounted(0.0)).unwrap(),
            exact_value_under_strategy(st, &a, Quantity::FinalBlack).unwrap()
        );
        let v = exact_value_under_strategy(st, &a, Quantity::Discounted(0.1)).unwrap();
        assert!(v.exact().is_none());
        assert!(v.to_f64() < 125.0 / 33.0);
    }

    #[test]
    fn dominance_at_zero_discount() {
        let grid: Vec<StrategySpec> = ["1/2", "11/20", "3/5", "2/3", "3/4", "9/10"]
            .iter()
            .map(|x| StrategySpec::threshold(q(x)).unwrap())
            .collect();
        for n in 1..=30u64 {
            for b in 1..n {
                let st = s(n - b, b);
                let a = final_black_under(st, &StrategySpec::PolicyA).unwrap();
                let r = final_black_under(st, &StrategySpec::PolicyR).unwrap();
                for strat in &grid {
                    let v = final_black_under(st, strat).unwrap();
                    assert!(a >= v && v >= r, "{strat} at {st}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bounds_hold(w in 0u64..20, b in 1u64..20, num in 1i64..20, mu in 0.001f64..1.0) {
            let strat = StrategySpec::threshold(ratio(num, 20)).unwrap();
            let st = s(w, b);
            let fb = final_black_under(st, &strat).unwrap();
            let t = time_under(st, &strat).unwrap();
            prop_assert!(t >= BigRational::zero());
            prop_assert!(fb >= BigRational::zero() && fb <= ratio((w + b) as i64, 1));
            let disc = discounted_under(st, &strat, mu).unwrap();
            prop_assert!(disc <= crate::exact::real(&fb) + 1e-12);
        }
    }
}
