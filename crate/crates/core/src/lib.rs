//! Exact and stochastic analysis of the Mabinogion urn.
//!
//! An urn holds white and black balls. At each step a ball is drawn uniformly
//! at random and one ball of the *other* colour is recoloured to match it; the
//! chain stops once only one colour is left. Optionally a controller may
//! permanently remove white balls after every draw (and at time zero).
//!
//! The crate is organised bottom-up:
//!
//! - [`exact`]: big-integer / rational helpers (binomials, central binomial
//!   probabilities, correctly rounded conversion to `f64`).
//! - [`identities`]: the two binomial double-sum identities that reduce the
//!   symmetric absorption-time formulas to odd harmonic sums.
//! - [`recursion`]: the boundary-value solver for second order birth-death
//!   recursions, a discounted tridiagonal solver, and an exact linear-system
//!   oracle for arbitrary finite absorbing chains.
//! - [`mprocess`]: closed forms for the uncontrolled chain and its
//!   conditioned (h-transformed) version.
//! - [`apolicy`]: closed forms for the chain controlled by Policy A.
//! - [`strategy`]: removal strategies, q-threshold quantities and an exact
//!   dynamic program evaluating any strategy.
//! - [`asymptotics`]: large-parameter approximations with error audits.
//! - [`sim`]: reproducible parallel Monte Carlo.
//! - [`output`]: CSV / JSON record envelopes shared by the CLI and bindings.

pub mod apolicy;
pub mod asymptotics;
pub mod error;
pub mod exact;
pub mod identities;
pub mod mprocess;
pub mod output;
pub mod recursion;
pub mod sim;
pub mod strategy;
mod sum;

pub use error::{Error, Result};
pub use exact::{ExactInteger, ExactRational};
pub use mprocess::UrnState;
pub use strategy::StrategySpec;

