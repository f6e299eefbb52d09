//! A laboratory for repeated Bertrand price competition among online learners.
//!
//! The crate builds discretized oligopoly games, solves them for reference
//! objects (pure Nash equilibria, joint-profit maxima, iterated strict
//! dominance, correlated rationalizability, coarse correlated equilibria),
//! runs seeded multi-agent bandit simulations and scores the outcomes with
//! price and profit collusion indices.

pub mod agents;
pub mod config;
pub mod error;
pub mod experiments;
pub mod game;
pub mod lp;
pub mod metrics;
pub mod output;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};
