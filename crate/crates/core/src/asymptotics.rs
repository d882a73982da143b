//! Large-parameter approximations and audits against exact values.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apolicy::{PolicyA, PolicyAReal};
use crate::error::{Error, Result};
use crate::exact::{central_prob, central_prob_real, real, ExactRational};
use crate::mprocess::{expected_time_f64, expected_time_symmetric, UrnState};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Parameters up to this size are referenced against exact rationals.
pub const EXACT_REFERENCE_LIMIT: u64 = 200;

fn log_term(k: f64) -> f64 {
    k.ln() + 4f64.ln() + EULER_GAMMA
}

/// `T(k, k) ~ (k/2)(ln k + ln 4 + gamma)`.
pub fn approx_t_sym(k: u64) -> f64 {
    let k = k as f64;
    k / 2.0 * log_term(k)
}

/// `V^A(k, k) ~ 2k + pi/4 - sqrt(pi k)`.
pub fn approx_v_a(k: u64) -> f64 {
    let k = k as f64;
    2.0 * k + PI / 4.0 - (PI * k).sqrt()
}

/// `T^A(k, k) ~ (k/2 + pi/16 - sqrt(pi k)/4)(ln k + ln 4 + gamma) + 3pi/16 - sqrt(pi k)/4 - 1/4`.
pub fn approx_t_a(k: u64) -> f64 {
    let kf = k as f64;
    let root = (PI * kf).sqrt();
    (kf / 2.0 + PI / 16.0 - root / 4.0) * log_term(kf) + 3.0 * PI / 16.0 - root / 4.0 - 0.25
}

/// `T(w, b) ~ (N/2) ln(1/(2x - 1))` for a black fraction `1/2 < x < 1`.
pub fn approx_t_skewed(n: u64, x: f64) -> Result<f64> {
    if !(x > 0.5 && x < 1.0) {
        return Err(Error::OutOfRange(format!("black fraction x = {x} must lie in (1/2, 1)")));
    }
    Ok(n as f64 / 2.0 * (1.0 / (2.0 * x - 1.0)).ln())
}

/// `p_k ~ 1/sqrt(pi k)`.
pub fn approx_p(k: u64) -> f64 {
    1.0 / (PI * k as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    /// `k`, or `N` for the skewed-start audit
    pub parameter: u64,
    pub exact: Option<f64>,
    pub approx: f64,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
}

impl ApproxReport {
    pub fn new(parameter: u64, exact: Option<f64>, approx: f64) -> Self {
        let abs_err = exact.map(|e| (e - approx).abs());
        let rel_err = exact.and_then(|e| abs_err.map(|a| if e == 0.0 { f64::INFINITY } else { a / e.abs() }));
        Self { parameter, exact, approx, abs_err, rel_err }
    }

    pub const CSV_HEADER: [&'static str; 5] = ["parameter", "exact", "approx", "abs_err", "rel_err"];

    pub fn csv_record(&self) -> [String; 5] {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.15e}")).unwrap_or_default();
        [
            self.parameter.to_string(),
            opt(self.exact),
            format!("{:.15e}", self.approx),
            opt(self.abs_err),
            opt(self.rel_err),
        ]
    }
}

/// What an audit compares.
#[derive(Debug, Clone, PartialEq)]
pub enum AuditQuantity {
    /// `T(k, k)` against [`approx_t_sym`]
    TimeSymmetric,
    /// `v_k` against [`approx_v_a`]
    PolicyAValue,
    /// `t_k` against [`approx_t_a`]
    PolicyATime,
    /// `p_k` against [`approx_p`]
    CentralProb,
    /// `V^A(k,k) / (2 V(k,k))` against 1
    ValueRatio,
    /// `T^A(k,k) / T(k,k)` against 1
    TimeRatio,
    /// `T(w, b)` with `b = ceil(xN)`, `w = floor((1-x)N)` against
    /// [`approx_t_skewed`]; the parameter is `N`
    TimeSkewed(ExactRational),
}

impl AuditQuantity {
    pub fn label(&self) -> String {
        match self {
            Self::TimeSymmetric => "t-sym".into(),
            Self::PolicyAValue => "v-a".into(),
            Self::PolicyATime => "t-a".into(),
            Self::CentralProb => "p".into(),
            Self::ValueRatio => "ratio-v".into(),
            Self::TimeRatio => "ratio-t".into(),
            Self::TimeSkewed(x) => format!("t-skewed:{x}"),
        }
    }
}

impl std::str::FromStr for AuditQuantity {
    type Err = Error;

    /// Inverse of [`AuditQuantity::label`].
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "t-sym" => Self::TimeSymmetric,
            "v-a" => Self::PolicyAValue,
            "t-a" => Self::PolicyATime,
            "p" => Self::CentralProb,
            "ratio-v" => Self::ValueRatio,
            "ratio-t" => Self::TimeRatio,
            other => match other.strip_prefix("t-skewed:") {
                Some(x) => Self::TimeSkewed(crate::exact::parse_rational(x)?),
                None => return Err(Error::Parse(format!("unknown audit quantity {other:?}"))),
            },
        })
    }
}

/// The benchmark-grid start state for `N` balls and black fraction `x`.
pub fn skewed_state(n: u64, x: &ExactRational) -> Result<UrnState> {
    use num_bigint::BigInt;
    use num_traits::{One, ToPrimitive};
    let nn = ExactRational::from_integer(BigInt::from(n));
    let black = crate::exact::ceil(&(&nn * x)).to_u64().ok_or(Error::Overflow)?;
    let white = (&nn * (ExactRational::one() - x)).floor().to_integer().to_u64().ok_or(Error::Overflow)?;
    Ok(UrnState::new(white, black))
}

/// Per-parameter reports; exact references come from rationals up to
/// `k = 200` and from floating recursions beyond.
pub fn audit(quantity: &AuditQuantity, params: &[u64]) -> Result<Vec<ApproxReport>> {
    if params.contains(&0) {
        return Err(Error::OutOfRange("audit parameters must be positive".into()));
    }
    let k_max = params.iter().copied().max().unwrap_or(1);
    let needs_a = matches!(
        quantity,
        AuditQuantity::PolicyAValue | AuditQuantity::PolicyATime | AuditQuantity::ValueRatio | AuditQuantity::TimeRatio
    );
    let exact_a = needs_a.then(|| PolicyA::new(k_max.min(EXACT_REFERENCE_LIMIT)));
    let float_a = (needs_a && k_max > EXACT_REFERENCE_LIMIT).then(|| PolicyAReal::new(k_max));
    let v = |k: u64| match (&exact_a, &float_a) {
        (Some(e), _) if k <= EXACT_REFERENCE_LIMIT => real(e.sequences().v(k)),
        (_, Some(f)) => f.v(k),
        _ => unreachable!(),
    };
    let t = |k: u64| match (&exact_a, &float_a) {
        (Some(e), _) if k <= EXACT_REFERENCE_LIMIT => real(e.sequences().t(k)),
        (_, Some(f)) => f.t(k),
        _ => unreachable!(),
    };
    let t_sym = |k: u64| -> Result<f64> {
        if k <= EXACT_REFERENCE_LIMIT {
            Ok(real(&expected_time_symmetric(k)))
        } else {
            expected_time_f64(UrnState::new(k, k))
        }
    };
    params
        .par_iter()
        .map(|&k| {
            Ok(match quantity {
                AuditQuantity::TimeSymmetric => ApproxReport::new(k, Some(t_sym(k)?), approx_t_sym(k)),
                AuditQuantity::PolicyAValue => ApproxReport::new(k, Some(v(k)), approx_v_a(k)),
                AuditQuantity::PolicyATime => ApproxReport::new(k, Some(t(k)), approx_t_a(k)),
                AuditQuantity::CentralProb => {
                    let exact = if k <= EXACT_REFERENCE_LIMIT { real(&central_prob(k)) } else { central_prob_real(k) };
                    ApproxReport::new(k, Some(exact), approx_p(k))
                }
                AuditQuantity::ValueRatio => ApproxReport::new(k, Some(v(k) / (2 * k) as f64), 1.0),
                AuditQuantity::TimeRatio => ApproxReport::new(k, Some(t(k) / t_sym(k)?), 1.0),
                AuditQuantity::TimeSkewed(x) => {
                    let approx = approx_t_skewed(k, real(x))?;
                    let exact = expected_time_f64(skewed_state(k, x)?)?;
                    ApproxReport::new(k, Some(exact), approx)
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn audit_labels_round_trip() {
        for q in [
            AuditQuantity::TimeSymmetric,
            AuditQuantity::PolicyAValue,
            AuditQuantity::PolicyATime,
            AuditQuantity::CentralProb,
            AuditQuantity::ValueRatio,
            AuditQuantity::TimeRatio,
            AuditQuantity::TimeSkewed(ratio(3, 4)),
        ] {
            assert_eq!(q.label().parse::<AuditQuantity>().unwrap(), q);
        }
        assert!("t-skewed:x".parse::<AuditQuantity>().is_err());
        assert!("speed".parse::<AuditQuantity>().is_err());
    }

    #[test]
    fn gamma_matches_printed_digits() {
        assert!(format!("{EULER_GAMMA}").starts_with("0.5772"));
    }

    #[test]
    fn worked_example_values() {
        assert_eq!(approx_t_sym(50_000).round(), 319_582.0);
        assert_eq!(approx_v_a(50_000).round(), 99_604.0);
        assert_eq!(approx_t_a(50_000).round(), 318_219.0);
    }

    #[test]
    fn small_k_examples() {
        assert!((approx_t_sym(1) - 0.9817).abs() < 1e-4);
        assert!((approx_t_sym(1) - 1.0).abs() < 0.02);
        assert!((approx_p(1) - 0.5642).abs() < 1e-4);
        let r = audit(&AuditQuantity::TimeSymmetric, &[100]).unwrap();
        assert!(r[0].abs_err.unwrap() < 0.01);
    }

    #[test]
    fn skewed_examples() {
        assert!((approx_t_skewed(2_000_000, 0.75).unwrap() - 693_147.18).abs() < 0.01);
        assert!((approx_t_skewed(2_000_000, 0.55).unwrap() - 2_302_585.09).abs() < 0.01);
        assert!(approx_t_skewed(10, 0.5).is_err());
        assert!(approx_t_skewed(10, 1.0).is_err());
        assert_eq!(skewed_state(20_000, &ratio(3, 4)).unwrap(), UrnState::new(5_000, 15_000));
        assert_eq!(skewed_state(200, &ratio(101, 200)).unwrap(), UrnState::new(99, 101));
        let r = audit(&AuditQuantity::TimeSkewed(ratio(3, 4)), &[20_000]).unwrap();
        assert!(r[0].rel_err.unwrap() < 1e-3);
    }

    #[test]
    fn central_prob_approximation() {
        let r = audit(&AuditQuantity::CentralProb, &[100, 10_000]).unwrap();
        assert!(r[0].rel_err.unwrap() < 0.01);
        assert!(r[1].rel_err.unwrap() < 1e-4);
    }

    #[test]
    fn error_bounds() {
        let ks: Vec<u64> = (4..=200).collect();
        for q in [AuditQuantity::PolicyAValue, AuditQuantity::PolicyATime] {
            for r in audit(&q, &ks).unwrap() {
                assert!(r.abs_err.unwrap() < 0.1, "{q:?} k={}", r.parameter);
                if r.parameter > 25 {
                    assert!(r.rel_err.unwrap() < 1e-3, "{q:?} k={}", r.parameter);
                }
            }
        }
    }

    #[test]
    fn ratios_shrink() {
        let ks: Vec<u64> = (4..=11).map(|j| 1u64 << j).collect();
        for q in [AuditQuantity::ValueRatio, AuditQuantity::TimeRatio] {
            let errs: Vec<f64> = audit(&q, &ks).unwrap().iter().map(|r| r.abs_err.unwrap()).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{q:?}: {errs:?}");
        }
    }

    #[test]
    fn report_fields() {
        let r = ApproxReport::new(3, None, 1.5);
        assert_eq!(r.abs_err, None);
        assert_eq!(r.csv_record()[1], "");
        let r = ApproxReport::new(3, Some(2.0), 1.5);
        assert_eq!(r.abs_err, Some(0.5));
        assert_eq!(r.rel_err, Some(0.25));
        assert!(audit(&AuditQuantity::CentralProb, &[0]).is_err());
    }
}
