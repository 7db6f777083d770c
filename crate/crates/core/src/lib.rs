//! SIS spreading over time-varying networks whose links switch according to
//! aggregated Markov processes.
//!
//! The crate is organised around the data flow of a stability analysis:
//!
//! - [`graph`]: edge processes (two-state, Coxian, static), dynamic graph
//!   models (edge- and arc-independent) and the stationary mean matrix `Ā`.
//! - [`spectral`]: spectral abscissa `η`, matrix measure `μ`, the
//!   concentration function `κ_{b,d}` and a bounded scalar maximizer.
//! - [`threshold`]: the linear-size almost-sure stability certificates and
//!   the static baselines, reported as [`threshold::ThresholdReport`].
//! - [`oracle`]: exponential-size ground truth for small graphs (Kronecker
//!   condition, random-matrix expectations, concentration tail checks).
//! - [`sim`]: exact stochastic simulation, the upper-bounding linear systems
//!   and decay-rate estimation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod threshold;

pub use error::{Error, Result};
