//! Right-tail estimation for the Tracy-Widom beta laws.
//!
//! `P(TW_beta > a)` equals the probability that the diffusion
//! `dX = (t + a - X^2) dt + (2/sqrt(beta)) dB` started at `+infinity`
//! explodes to `-infinity` in finite time. The crate simulates that
//! diffusion directly, estimates the rare explosions through a reversed
//! drift and Girsanov reweighting, and cross-checks both against the top
//! eigenvalue of the tridiagonal beta ensemble and closed-form tail
//! asymptotics.

// `!(x > 0.0)` is how parameter checks reject NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod diffusion;
pub mod ensemble;
pub mod error;
pub mod estimate;
pub mod girsanov;
pub mod harness;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use estimate::TailEstimate;
