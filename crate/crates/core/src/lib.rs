//! Seeding and budget allocation for a product entering a market held by an
//! incumbent, modelled as two competing SIS epidemics on a social graph.
//!
//! The entrant can pay to form a community among chosen users, which adds a
//! rank-one term `gamma u u^T` to the graph it spreads over. The crate
//! computes the critical community that puts the entrant exactly at its
//! survival threshold, improves on it by a first-order local search, compares
//! the result against centrality baselines, and runs the simulations needed
//! to measure market shares.

pub mod allocate;
pub mod baselines;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod seeding;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::Graph;
