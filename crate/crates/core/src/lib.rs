//! Two-variable saddle-point analysis of the average distribution of divisors
//! of friable integers, validated against exact enumeration.
//!
//! Module map:
//!
//! * [`friable`]: exact enumeration of y-friable integers and divisor statistics.
//! * [`alpha`]: the one-variable saddle point α(x, y) and its derivative ladder.
//! * [`dickman`]: Dickman's function ρ(u).
//! * [`series`]: the bivariate Euler-factor kernel Ξ, f_y and friends.
//! * [`beta`]: the two-variable saddle point (β(v), β(−v)) and the exponent E(v).
//! * [`law`]: limit laws, predictions and the comparison engine.
//! * [`report`] and [`cli`]: serialization and the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod beta;
pub mod cli;
pub mod dickman;
pub mod error;
pub mod friable;
pub mod law;
pub mod quad;
pub mod report;
pub mod series;

pub use error::{FriaError, Result};
