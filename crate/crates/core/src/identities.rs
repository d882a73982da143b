//! Two binomial double-sum identities, checked in exact arithmetic.
//!
//! For `n >= 1`:
//!
//! ```text
//! (1/2n)     sum_{j=0}^{n-1} sum_{i=0}^{j} C(2n,i)   / C(2n-1,j) = H(n)
//! (1/(2n-1)) sum_{j=0}^{n-2} sum_{i=0}^{j} C(2n-1,i) / C(2n-2,j) = H(n) - 2^{2n-2} / (n C(2n,n))
//! ```
//!
//! where `H(n) = (1/2) sum_{i=0}^{n-1} 1/(2i+1)`. The first one collapses the
//! Policy-A time recursion, the second the symmetric uncontrolled time.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::exact::{binomial, binomial_row, ratio, ExactRational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `C(2n, i) / C(2n-1, j)` sum against the half odd harmonic sum
    CentralRow,
    /// `C(2n-1, i) / C(2n-2, j)` sum against the corrected harmonic sum
    OffCentralRow,
}

impl Identity {
    pub fn label(self) -> &'static str {
        match self {
            Identity::CentralRow => "central_row",
            Identity::OffCentralRow => "off_central_row",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub identity: Identity,
    pub n: u64,
    pub lhs: ExactRational,
    pub rhs: ExactRational,
    pub holds: bool,
}

/// `(1/2) sum_{i=0}^{n-1} 1/(2i+1)`.
pub fn half_odd_harmonic(n: u64) -> ExactRational {
    odd_harmonic(n) / BigInt::from(2)
}

/// `sum_{i=0}^{n-1} 1/(2i+1)`.
pub fn odd_harmonic(n: u64) -> ExactRational {
    (0..n).map(|i| ratio(1, 2 * i as i64 + 1)).sum()
}

/// `sum_{j=0}^{jmax} (sum_{i=0}^{j} C(top, i)) / C(top - 1, j)` with running
/// prefix sums over row `top`.
fn prefix_ratio_sum(top: u64, jmax: i64) -> ExactRational {
    if jmax < 0 {
        return BigRational::zero();
    }
    let upper = binomial_row(top);
    let lower = binomial_row(top - 1);
    let mut prefix = BigInt::zero();
    let mut acc = BigRational::zero();
    for j in 0..=jmax as usize {
        prefix += &upper[j];
        acc += BigRational::new(prefix.clone(), lower[j].clone());
    }
    acc
}

pub fn double_sum_22_lhs(n: u64) -> ExactRational {
    assert!(n >= 1, "n must be positive");
    prefix_ratio_sum(2 * n, n as i64 - 1) / BigInt::from(2 * n)
}

pub fn double_sum_23_lhs(n: u64) -> ExactRational {
    assert!(n >= 1, "n must be positive");
    prefix_ratio_sum(2 * n - 1, n as i64 - 2) / BigInt::from(2 * n - 1)
}

/// Right side of the second identity.
pub fn double_sum_23_rhs(n: u64) -> ExactRational {
    assert!(n >= 1, "n must be positive");
    let correction = BigRational::new(
        BigInt::one() << (2 * n - 2) as usize,
        BigInt::from(n) * binomial(2 * n, n as i64),
    );
    half_odd_harmonic(n) - correction
}

pub fn check(identity: Identity, n: u64) -> IdentityReport {
    let (lhs, rhs) = match identity {
        Identity::CentralRow => (double_sum_22_lhs(n), half_odd_harmonic(n)),
        Identity::OffCentralRow => (double_sum_23_lhs(n), double_sum_23_rhs(n)),
    };
    let holds = lhs == rhs;
    IdentityReport { identity, n, lhs, rhs, holds }
}

/// Both identities for every `1 <= n <= n_max`, ordered by `n`.
pub fn verify_identities(n_max: u64) -> Vec<IdentityReport> {
    (1..=n_max)
        .into_par_iter()
        .flat_map_iter(|n| [check(Identity::CentralRow, n), check(Identity::OffCentralRow, n)])
        .collect()
}
