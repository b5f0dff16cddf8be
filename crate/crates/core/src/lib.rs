//! Multidimensional elephant random walks.
//!
//! Step-law samplers for the MERW and the d-ERW, shared-uniform couplings,
//! the Pólya urn with its continuous-time embedding, numerics for the
//! superdiffusive limit (moments, characteristic function, density) and a
//! Monte Carlo statistics harness.
//!
//! Code that does arithmetic on probabilities is generic over [`Scalar`];
//! the aliases below fix the common instantiations.

pub mod coupling;
pub mod error;
pub mod limit;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod urn;
pub mod walk;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;

pub type StepDistributionF64 = walk::StepDistribution<f64>;
pub type StepDistributionQ = walk::StepDistribution<Rational>;
pub type DerivedConstantsF64 = walk::DerivedConstants<f64>;
pub type DerivedConstantsQ = walk::DerivedConstants<Rational>;
pub type MomentTableQ = limit::MomentTable<Rational>;
pub type MomentTableF64 = limit::MomentTable<f64>;
