//! Inexact successive quadratic approximation (SQA) for composite convex
//! minimization, with runtime-auditable convergence guarantees.
//!
//! The solver minimizes `F = f + g` (smooth `f`, prox-capable convex `g`)
//! by repeatedly minimizing a metric-regularized model of `F` around the
//! current iterate, accepting inexact model solutions under a relative
//! accuracy rule, and stepping along the resulting direction with one of
//! four backtracking line searches. Every decrease lemma, rate theorem and
//! stepsize floor behind the scheme is exposed as a measurement over the
//! iteration trace, so a run can certify the theory it relies on.
//!
//! Crate layout:
//!
//! * [`model`] — vectors, the objective split, metrics, the subproblem
//!   model `Q` and linearized decrease `Delta`;
//! * [`problems`] — the benchmark catalog (smooth terms, closed-form
//!   proxes, growth examples and the non-vanishing-distance fixture);
//! * [`metric_policy`] — metric factories with certified spectral bands;
//! * [`inner`] — the inexact subproblem solver and its acceptance
//!   certificate;
//! * [`linesearch`] — the four backtracking strategies;
//! * [`driver`] — the outer loop and its iteration records;
//! * [`diagnostics`] — rate estimators, decrease audits, stepsize floors,
//!   growth probes;
//! * [`oracle`] — independent high-accuracy references and fixtures;
//! * [`cli`] — the benchmark harness behind the `isqa` binary.
//!
//! The `examples/` directory has one runnable example per capability;
//! start with `cargo run --example quickstart`.

// Validation sites use `!(x > 0.0)` so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod driver;
mod error;
pub mod inner;
pub mod linesearch;
pub mod metric_policy;
pub mod model;
mod na_bridge;
pub mod oracle;
pub mod problems;

pub use error::{Error, Result};
