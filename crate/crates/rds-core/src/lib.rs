//! Simulation and estimation laboratory for network-driven sampling.
//!
//! The population is a weighted graph; the sample is a tree-indexed Markov
//! walk on it. The crate provides graph and kernel construction with exact
//! spectral decompositions, referral-tree growth, the walk itself, the
//! standard point estimators with a bias test, exact and plug-in variance
//! machinery, and Monte Carlo experiment drivers.

pub mod error;
pub mod estimators;
pub mod graph;
pub mod montecarlo;
pub mod rng;
pub mod tree;
pub mod variance;
pub mod walk;

pub use error::{Error, Result};
