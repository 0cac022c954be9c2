//! A desk-scale laboratory for expectation thresholds.
//!
//! - [`system`]: ground sets, families, fractional covers, weight vectors.
//! - [`solvers`]: exact integral and fractional cover programs, thresholds.
//! - [`fragments`]: cutoffs, residual traces and towers of minimum fragments.
//! - [`montecarlo`]: seeded experiments on the selector process.
//! - [`rounding`]: weight vectors from fractional covers and gap reports.
//! - [`instances`]: example families and random generators.
//! - [`instance`]: the JSON instance format.

pub mod error;
pub mod fragments;
pub mod instance;
pub mod instances;
mod lp;
pub mod montecarlo;
pub mod rng;
pub mod rounding;
pub mod solvers;
pub mod subset;
pub mod system;

pub use error::{Error, Result};
pub use subset::Subset;
pub use system::{
    cover_cost, is_cover, is_fractional_cover, weighted_mass, FractionalCover, GroundSet, Lambdas,
    SetSystem, WeightVector,
};
