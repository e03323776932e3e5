//! Analysis of balanced triangular urn models.
//!
//! An urn holds balls of `K+1` colors with total mass `n+1` after `n` draws. A
//! color is drawn with probability proportional to its count and the matching
//! row of an upper triangular, row-stochastic replacement matrix is added. This
//! crate computes the block structure and predicted almost-sure growth rates
//! of every color, checks them exactly by enumerating all draw histories at
//! small depth, and checks them statistically with seeded Monte Carlo
//! ensembles.

pub mod analysis;
pub mod ensemble;
pub mod matrix;
pub mod oracle;
pub mod rational;
pub mod rearrange;
pub mod simulator;
pub mod spectral;
pub mod stats;
#[doc(hidden)]
pub mod testing;

pub use matrix::{BlockStructure, ModelError, ReplacementMatrix, ValidateOptions};
pub use rational::Rational;
pub use rearrange::{canonicalize, rearrange_to_increasing, Rearrangement};
pub use spectral::{per_color_rates, theorem_rates, ColorRate, LimitProfile};
