//! Second order birth-death recursions and a general absorbing-chain oracle.
//!
//! [`RecursionProblem`] describes
//!
//! ```text
//! X(k) = p(k) X(k-1) + (1 - p(k)) X(k+1) + r(k),    a < k < b,
//! ```
//!
//! with `X(a)`, `X(b)` given. With `D(k) = X(k) - X(k-1)` the recursion
//! becomes first order, `D(k+1) = rho(k) D(k) - r(k) / (1 - p(k))` where
//! `rho = p / (1 - p)`, and the solution is
//!
//! ```text
//! X(c) = X(a) - Q(c) + S(c) / S(b) * (X(b) - X(a) + Q(b))
//! S(c) = sum_{i=1}^{c-a} prod_{m=1}^{i-1} rho(a+m)
//! Q(c) = sum_{i=1}^{c-a} sum_{j=1}^{i-1} r(a+j)/(1-p(a+j)) prod_{m=j+1}^{i-1} rho(a+m)
//! ```
//!
//! Both `S` and `Q` are accumulated in a single forward pass.
//!
//! [`brute_force_values`] solves the first-step equations of an arbitrary
//! finite absorbing chain by sparse Gaussian elimination over the rationals.
//! It shares no code with the recursion solver and is used as an oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Num, One, Zero};

use crate::error::{Error, Result};
use crate::exact::ExactRational;

/// Field operations needed by the solvers; implemented for `f64` and
/// [`ExactRational`].
pub trait Scalar: Clone + Num + PartialOrd + Debug {}

impl Scalar for f64 {}
impl Scalar for BigRational {}

/// Down-step probabilities of a birth-death chain on `left..=right`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeath<T> {
    left: i64,
    right: i64,
    /// `p(k)` for `k = left+1 ..= right-1`
    down: Vec<T>,
}

impl<T: Scalar> BirthDeath<T> {
    pub fn new(left: i64, right: i64, p: impl Fn(i64) -> T) -> Result<Self> {
        if right <= left {
            return Err(Error::OutOfRange(format!("need left < right, got {left} >= {right}")));
        }
        let down: Vec<T> = (left + 1..right).map(&p).collect();
        for (i, pk) in down.iter().enumerate() {
            if !(pk > &T::zero() && pk < &T::one()) {
                return Err(Error::InvalidProbability {
                    index: left + 1 + i as i64,
                    value: format!("{pk:?}"),
                });
            }
        }
        Ok(Self { left, right, down })
    }

    pub fn left(&self) -> i64 {
        self.left
    }

    pub fn right(&self) -> i64 {
        self.right
    }

    pub fn down(&self, k: i64) -> &T {
        &self.down[(k - self.left - 1) as usize]
    }

    fn check_index(&self, c: i64) -> Result<usize> {
        if c < self.left || c > self.right {
            return Err(Error::OutOfRange(format!(
                "index {c} outside [{}, {}]",
                self.left, self.right
            )));
        }
        Ok((c - self.left) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionProblem<T> {
    chain: BirthDeath<T>,
    /// `r(k)` for interior `k`
    cost: Vec<T>,
    left_value: T,
    right_value: T,
}

impl<T: Scalar> RecursionProblem<T> {
    pub fn new(
        left: i64,
        right: i64,
        p: impl Fn(i64) -> T,
        r: impl Fn(i64) -> T,
        left_value: T,
        right_value: T,
    ) -> Result<Self> {
        let chain = BirthDeath::new(left, right, p)?;
        let cost = (left + 1..right).map(r).collect();
        Ok(Self { chain, cost, left_value, right_value })
    }

    pub fn from_chain(chain: BirthDeath<T>, r: impl Fn(i64) -> T, left_value: T, right_value: T) -> Self {
        let cost = (chain.left + 1..chain.right).map(r).collect();
        Self { chain, cost, left_value, right_value }
    }

    pub fn chain(&self) -> &BirthDeath<T> {
        &self.chain
    }

    /// `X(c)` for a single `a <= c <= b`.
    pub fn solve_boundary(&self, c: i64) -> Result<T> {
        let idx = self.chain.check_index(c)?;
        Ok(self.solve_all().swap_remove(idx))
    }

    /// `X(a), X(a+1), ..., X(b)`.
    pub fn solve_all(&self) -> Vec<T> {
        let n = (self.chain.right - self.chain.left) as usize;
        // s[t] = S(a+t), q[t] = Q(a+t)
        let mut s = Vec::with_capacity(n + 1);
        let mut q = Vec::with_capacity(n + 1);
        s.push(T::zero());
        q.push(T::zero());
        let mut prod = T::one();
        let mut d = T::zero();
        for t in 1..=n {
            if t > 1 {
                let p = &self.chain.down[t - 2];
                let one_minus = T::one() - p.clone();
                let rho = p.clone() / one_minus.clone();
                prod = prod * rho.clone();
                d = rho * d + self.cost[t - 2].clone() / one_minus;
            }
            s.push(s[t - 1].clone() + prod.clone());
            q.push(q[t - 1].clone() + d.clone());
        }
        let span = self.right_value.clone() - self.left_value.clone() + q[n].clone();
        let total = s[n].clone();
        (0..=n)
            .map(|t| {
                if t == 0 {
                    self.left_value.clone()
                } else if t == n {
                    self.right_value.clone()
                } else {
                    self.left_value.clone() - q[t].clone() + s[t].clone() * span.clone() / total.clone()
                }
            })
            .collect()
    }
}

/// Solves `U(k) = discount * [p(k) U(k-1) + (1-p(k)) U(k+1)]` on the interior
/// with `U(left) = payoff_left`, `U(right) = payoff_right`. Returns all values
/// from `left` to `right`.
pub fn solve_discounted_all<T: Scalar>(
    chain: &BirthDeath<T>,
    discount: T,
    payoff_left: T,
    payoff_right: T,
) -> Result<Vec<T>> {
    if !(discount > T::zero() && discount <= T::one()) {
        return Err(Error::InvalidDiscount(format!("{discount:?}")));
    }
    let n = (chain.right - chain.left) as usize;
    let m = n - 1; // interior unknowns
    let mut out = Vec::with_capacity(n + 1);
    out.push(payoff_left.clone());
    if m == 0 {
        out.push(payoff_right);
        return Ok(out);
    }
    // Thomas algorithm on -d p U(k-1) + U(k) - d (1-p) U(k+1) = rhs
    let mut upper: Vec<T> = Vec::with_capacity(m);
    let mut rhs: Vec<T> = Vec::with_capacity(m);
    for i in 0..m {
        let p = chain.down[i].clone();
        let sub = T::zero() - discount.clone() * p.clone();
        let sup = T::zero() - discount.clone() * (T::one() - p.clone());
        let mut r = T::zero();
        if i == 0 {
            r = r + discount.clone() * p * payoff_left.clone();
        }
        if i == m - 1 {
            r = r + discount.clone() * (T::one() - chain.down[i].clone()) * payoff_right.clone();
        }
        let (denom, r) = if i == 0 {
            (T::one(), r)
        } else {
            let denom = T::one() - sub.clone() * upper[i - 1].clone();
            let r = r - sub * rhs[i - 1].clone();
            (denom, r)
        };
        upper.push(if i == m - 1 { T::zero() } else { sup / denom.clone() });
        rhs.push(r / denom);
    }
    let mut interior = vec![T::zero(); m];
    interior[m - 1] = rhs[m - 1].clone();
    for i in (0..m - 1).rev() {
        interior[i] = rhs[i].clone() - upper[i].clone() * interior[i + 1].clone();
    }
    out.extend(interior);
    out.push(payoff_right);
    Ok(out)
}

/// Floating discounted solve evaluated at a single index `c`.
pub fn solve_discounted(
    chain: &BirthDeath<f64>,
    per_step_discount: f64,
    payoff_left: f64,
    payoff_right: f64,
    c: i64,
) -> Result<f64> {
    if !(per_step_discount > 0.0 && per_step_discount <= 1.0) {
        return Err(Error::InvalidDiscount(per_step_discount.to_string()));
    }
    let idx = chain.check_index(c)?;
    Ok(solve_discounted_all(chain, per_step_discount, payoff_left, payoff_right)?.swap_remove(idx))
}

/// A finite absorbing Markov chain with rational transition probabilities.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    transitions: Vec<Vec<(usize, ExactRational)>>,
    absorbing: Vec<bool>,
    step_cost: Vec<ExactRational>,
    terminal_payoff: Vec<ExactRational>,
}

/// Quantity computed by [`brute_force_values`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainQuantity {
    /// `E[payoff(X_H)]`
    TerminalPayoff,
    /// `E[sum of step costs until absorption]`
    TotalCost,
}

pub const MAX_ORACLE_STATES: usize = 50_000;

impl ChainSpec {
    /// Builds a chain on states `0..n`. Transitions of absorbing states are
    /// ignored. Rows of transient states must sum to one.
    pub fn new(
        n: usize,
        transition: impl Fn(usize) -> Vec<(usize, ExactRational)>,
        absorbing: impl Fn(usize) -> bool,
        step_cost: impl Fn(usize) -> ExactRational,
        terminal_payoff: impl Fn(usize) -> ExactRational,
    ) -> Result<Self> {
        if n > MAX_ORACLE_STATES {
            return Err(Error::OutOfRange(format!("{n} states exceeds oracle limit {MAX_ORACLE_STATES}")));
        }
        let absorbing: Vec<bool> = (0..n).map(absorbing).collect();
        let mut transitions = Vec::with_capacity(n);
        for (s, &absorbed) in absorbing.iter().enumerate() {
            if absorbed {
                transitions.push(Vec::new());
                continue;
            }
            let row: Vec<_> = transition(s).into_iter().filter(|(_, p)| !p.is_zero()).collect();
            let mut total = ExactRational::zero();
            for (t, p) in &row {
                if *t >= n || p < &ExactRational::zero() {
                    return Err(Error::OutOfRange(format!("bad transition {s} -> {t} with probability {p}")));
                }
                total += p;
            }
            if !total.is_one() {
                return Err(Error::OutOfRange(format!("row {s} sums to {total}")));
            }
            transitions.push(row);
        }
        let chain = Self {
            transitions,
            absorbing,
            step_cost: (0..n).map(step_cost).collect(),
            terminal_payoff: (0..n).map(terminal_payoff).collect(),
        };
        chain.check_absorbing()?;
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.absorbing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absorbing.is_empty()
    }

    pub fn transitions(&self, s: usize) -> &[(usize, ExactRational)] {
        &self.transitions[s]
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    fn check_absorbing(&self) -> Result<()> {
        let n = self.len();
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, row) in self.transitions.iter().enumerate() {
            for (t, _) in row {
                incoming[*t].push(s);
            }
        }
        let mut reaches = self.absorbing.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| reaches[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &incoming[t] {
                if !reaches[s] {
                    reaches[s] = true;
                    queue.push_back(s);
                }
            }
        }
        match reaches.iter().position(|r| !r) {
            Some(s) => Err(Error::NonAbsorbingChain(s)),
            None => Ok(()),
        }
    }
}

/// Exact first-step solution for every state. Absorbing states carry their
/// terminal payoff (or zero cost).
///
/// Elimination runs in state order without pivoting, which is valid because
/// `I - P` restricted to transient states is a nonsingular M-matrix. Fill-in
/// stays small when transitions mostly point to nearby or later states.
pub fn brute_force_values(chain: &ChainSpec, quantity: ChainQuantity) -> Result<Vec<ExactRational>> {
    let n = chain.len();
    let transient: Vec<usize> = (0..n).filter(|&s| !chain.absorbing[s]).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        index[s] = i;
    }
    let m = transient.len();
    let mut rows: Vec<BTreeMap<usize, ExactRational>> = Vec::with_capacity(m);
    let mut rhs: Vec<ExactRational> = Vec::with_capacity(m);
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (i, &s) in transient.iter().enumerate() {
        let mut row = BTreeMap::new();
        row.insert(i, ExactRational::one());
        let mut b = match quantity {
            ChainQuantity::TotalCost => chain.step_cost[s].clone(),
            ChainQuantity::TerminalPayoff => ExactRational::zero(),
        };
        for (t, p) in &chain.transitions[s] {
            if chain.absorbing[*t] {
                if quantity == ChainQuantity::TerminalPayoff {
                    b += p * &chain.terminal_payoff[*t];
                }
            } else {
                let entry = row.entry(index[*t]).or_insert_with(ExactRational::zero);
                *entry -= p;
            }
        }
        row.retain(|_, v| !v.is_zero());
        for &c in row.keys() {
            if c < i {
                col_rows[c].insert(i);
            }
        }
        rows.push(row);
        rhs.push(b);
    }

    for i in 0..m {
        let pivot = rows[i].get(&i).cloned().ok_or(Error::SingularSystem(i))?;
        let pivot_row: Vec<(usize, ExactRational)> =
            rows[i].range(i + 1..).map(|(c, v)| (*c, v.clone())).collect();
        let pivot_rhs = rhs[i].clone();
        let targets: Vec<usize> = std::mem::take(&mut col_rows[i]).into_iter().filter(|&j| j > i).collect();
        for j in targets {
            let Some(coef) = rows[j].remove(&i) else { continue };
            let factor = coef / &pivot;
            for (c, v) in &pivot_row {
                let entry = rows[j].entry(*c).or_insert_with(ExactRational::zero);
                *entry -= &factor * v;
                if entry.is_zero() {
                    rows[j].remove(c);
                } else if *c < j {
                    col_rows[*c].insert(j);
                }
            }
            let delta = &factor * &pivot_rhs;
            rhs[j] -= delta;
        }
    }

    let mut x = vec![ExactRational::zero(); m];
    for i in (0..m).rev() {
        let mut acc = rhs[i].clone();
        for (c, v) in rows[i].range(i + 1..) {
            acc -= v * &x[*c];
        }
        let pivot = &rows[i][&i];
        x[i] = acc / pivot;
    }

    Ok((0..n)
        .map(|s| {
            if chain.absorbing[s] {
                match quantity {
                    ChainQuantity::TerminalPayoff => chain.terminal_payoff[s].clone(),
                    ChainQuantity::TotalCost => ExactRational::zero(),
                }
            } else {
                x[index[s]].clone()
            }
        })
        .collect())
}
