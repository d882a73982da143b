//! Value parsers shared by the subcommands. Every numeric flag accepts
//! `p/q` rationals as well as plain decimals.

use mabinogion::exact::{parse_rational, ExactRational};
use mabinogion::strategy::{Quantity, StrategySpec};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rational(s: &str) -> Result<ExactRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A nonnegative integer, possibly written as a rational such as `24/2`.
pub fn count(s: &str) -> Result<u64, String> {
    let x = rational(s)?;
    if !x.is_integer() || x.is_negative() {
        return Err(format!("expected a nonnegative integer, got {s:?}"));
    }
    x.to_integer().to_u64().ok_or_else(|| format!("{s:?} is too large"))
}

pub fn real(s: &str) -> Result<f64, String> {
    let x = rational(s)?;
    mabinogion::exact::to_real(&x).map_err(|e| e.to_string())
}

pub fn strategy(s: &str) -> Result<StrategySpec, String> {
    s.parse().map_err(|e: mabinogion::Error| e.to_string())
}

/// A parsed value list; a newtype so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<ExactRational>);

pub fn grid_arg(s: &str) -> Result<Grid, String> {
    grid(s).map(Grid)
}

/// Comma separated values or half-open ranges `start:end:count`, which
/// expand to `start + i (end - start) / count` for `i < count`.
pub fn grid(s: &str) -> Result<Vec<ExactRational>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(rational(single)?),
            [start, end, n] => {
                let (start, end, n) = (rational(start)?, rational(end)?, count(n)?);
                if n == 0 {
                    return Err(format!("range {item:?} has zero points"));
                }
                let step = (&end - &start) / ExactRational::from_integer(n.into());
                for i in 0..n {
                    out.push(&start + &step * ExactRational::from_integer(i.into()));
                }
            }
            _ => return Err(format!("expected a value or start:end:count, got {item:?}")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// `--process` of the `exact` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    Uncontrolled,
    PolicyA,
    Controlled(StrategySpec),
    Conditional,
}

pub fn process(s: &str) -> Result<Process, String> {
    match s {
        "m" | "none" => Ok(Process::Uncontrolled),
        "a" | "A" => Ok(Process::PolicyA),
        "conditional" => Ok(Process::Conditional),
        "R" | "r" => Ok(Process::Controlled(StrategySpec::PolicyR)),
        other if other.starts_with("q:") => Ok(Process::Controlled(strategy(other)?)),
        other => Err(format!("expected m, a, R, q:<rational> or conditional, got {other:?}")),
    }
}

/// `--quantity`; a discount rate of exactly zero is kept exact.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactQuantity {
    Time,
    FinalBlack,
    AbsorbProb,
    Discounted(ExactRational),
}

impl ExactQuantity {
    pub fn label(&self) -> String {
        match self {
            Self::Time => "time".into(),
            Self::FinalBlack => "final-black".into(),
            Self::AbsorbProb => "absorb-prob".into(),
            Self::Discounted(mu) => format!("discounted:{mu}"),
        }
    }

    pub fn to_strategy_quantity(&self) -> Result<Quantity, String> {
        Ok(match self {
            Self::Time => Quantity::Time,
            Self::FinalBlack => Quantity::FinalBlack,
            Self::AbsorbProb => return Err("absorb-prob is only available for the uncontrolled process".into()),
            Self::Discounted(mu) if mu.is_zero() => Quantity::Discounted(0.0),
            Self::Discounted(mu) => Quantity::Discounted(mabinogion::exact::to_real(mu).map_err(|e| e.to_string())?),
        })
    }
}

pub fn quantity(s: &str) -> Result<ExactQuantity, String> {
    match s {
        "time" => Ok(ExactQuantity::Time),
        "final-black" => Ok(ExactQuantity::FinalBlack),
        "absorb-prob" => Ok(ExactQuantity::AbsorbProb),
        other => match other.strip_prefix("discounted:") {
            Some(mu) => {
                let mu = rational(mu)?;
                if mu.is_negative() {
                    return Err(format!("discount rate {mu} must be nonnegative"));
                }
                Ok(ExactQuantity::Discounted(mu))
            }
            None => Err(format!("expected time, final-black, absorb-prob or discounted:<mu>, got {other:?}")),
        },
    }
}

/// Exact per-step factor in `(0, 1]`.
pub fn factor(s: &str) -> Result<ExactRational, String> {
    let d = rational(s)?;
    if !(d.is_positive() && d <= ExactRational::one()) {
        return Err(format!("discount factor {d} must lie in (0, 1]"));
    }
    Ok(d)
}
