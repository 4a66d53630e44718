//! Nonparametric goodness-of-fit tests in the Gaussian sequence model and
//! the i.i.d. model on (0, 1): statistics, asymptotic power formulas, Besov
//! bodies, alternative constructions and a Monte Carlo harness.

pub mod alternatives;
pub mod chi2;
pub mod classes;
pub mod cli;
pub mod cvm;
pub mod error;
pub mod kernel;
pub mod mc;
pub mod quad;
pub mod quadrature;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
