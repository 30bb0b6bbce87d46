//! Upper-tail probabilities of weighted series of i.i.d. random variables
//! `sum_n a_n |xi_n|^p`.
//!
//! The crate provides four complementary views of the same object and the
//! tooling to compare them:
//!
//! - [`gauss`]: exact-level asymptotics for Gaussian terms (the infinite
//!   product representation of the tail), matched comparison thresholds,
//!   and the underlying special functions in log-space.
//! - [`ldp`]: logarithmic-level asymptotics `-r^p c ||a||_q^{-p}` for
//!   general light-tailed terms, with the constrained rate infimum behind
//!   them solved as a convex program.
//! - [`conditions`]: numerical checkers for the hypotheses under which two
//!   weight sequences have comparable tails.
//! - [`mc`]: an independent rare-event Monte Carlo oracle (plain and
//!   exponentially tilted importance sampling) used to verify the other
//!   modules empirically.
//!
//! [`seqspec`] supplies the weight sequences with certified norms and tail
//! sums; [`proofcheck`] holds falsification harnesses for the elementary
//! inequalities the comparison argument rests on; [`cli`] wires everything
//! into a reproducible experiment harness.

// Validation guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditions;
pub mod error;
pub mod gauss;
pub mod ldp;
pub mod mc;
pub mod proofcheck;
pub mod seqspec;

pub use error::{Error, Result};
pub use gauss::{GaussianParams, LogProb};
pub use ldp::{RateProblem, TailLaw};
pub use mc::{Estimate, SamplerConfig};
pub use seqspec::{Deviation, NormQuery, SequenceSpec};
