//! Feedback-regulated activation of solar prosumers, wind prosumers and
//! consumers in an energy community.
//!
//! A community manager counts active agents at every step and broadcasts one
//! scalar signal per population. Each agent activates with a probability
//! derived from that signal, its own running activity average and the
//! derivative of its private cost. Over time the running averages approach the
//! minimizer of the community's total cost subject to capacity constraints.
//!
//! The [`oracle`] module solves that minimization directly so the stochastic
//! outcome can be checked against it, and [`analysis`] holds the comparison
//! metrics.

pub mod agents;
pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod manager;
pub mod model;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
