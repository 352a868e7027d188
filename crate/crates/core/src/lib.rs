//! Stochastic discrimination ensembles.
//!
//! Weak models (regions of feature space) are generated at random, rated
//! on a training set, filtered for enrichment and coverage uniformity, and
//! combined into the discriminants `Y_ij` and `W_i`. The [`repro`] module
//! replays the 252-model worked example end to end and checks it against
//! the published tables.

pub mod cli;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod ratings;
pub mod rational;
pub mod repro;

pub use error::{Result, SdError};
