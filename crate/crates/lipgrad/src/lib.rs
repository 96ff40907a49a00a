//! Deterministic global optimization for black-box objectives whose gradient
//! is Lipschitz with an unknown constant.
//!
//! The crate provides:
//!
//! - a derivative-based diagonal solver with adaptive estimation of the
//!   gradient's Lipschitz constant and smooth auxiliary minorants
//!   ([`smoothd`]),
//! - the exact, non-redundant diagonal partition machinery it runs on
//!   ([`geometry`], [`partition`]),
//! - a generator of multiextremal test-function classes with known minima
//!   ([`gkls`]),
//! - center-sampling DIRECT baselines ([`direct`]),
//! - and a benchmark harness with solved-problem curves and SVG plots
//!   ([`bench`]).
//!
//! The `lipgrad` binary exposes all of it on the command line.

// validations are written `!(x > y)` on purpose: the negation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod builtins;
pub mod direct;
pub mod error;
pub mod geometry;
pub mod gkls;
pub mod objective;
pub mod partition;
pub mod run;
pub mod smoothd;

pub use error::{Error, Result};
pub use objective::{evaluate, trial_count, Point, Problem, TrialCounter, TrialRecord};
pub use run::{LoggedTrial, RunResult, StopReason};
pub use smoothd::{solve, solve_with_monitor, SolverConfig};
