//! Learning causal Bayesian networks over Boolean variables from a mix of
//! passive observations and targeted interventions.
//!
//! The pipeline runs [`discovery::run_discovery`] against an
//! [`simulator::Environment`], turns the candidate graph into a DAG with
//! [`discovery::resolve_to_dag`], fits CPTs with [`cbn::fit_mle`] and answers
//! queries with [`inference::propagate`] or [`inference::enumerate_posterior`].

pub mod cbn;
pub mod discovery;
mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
