//! Pathwise functional Itô calculus for fractional Brownian motion with `H ≥ ½`.

pub mod bsde;
pub mod error;
pub mod fbm;
pub mod harness;
pub mod formula_lab;
pub mod integrators;
pub mod malliavin;
pub mod path_space;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
