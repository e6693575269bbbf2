//! Estimating expectation values of spin-1/2 observables from a finite
//! number of copies of an unknown pure qubit state.
//!
//! The crate compares separate sharp measurements against joint unsharp
//! measurements, with unbiased, shrinkage, cross-weighted and Bayesian
//! estimators. Every strategy has an exact error oracle in [`analytic`]
//! and a seeded simulation in [`montecarlo`] that checks it.

pub mod analytic;
pub mod bloch;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod montecarlo;
pub mod povm;
pub mod quadrature;

pub use analytic::{ErrorQuery, StrategyId};
pub use bloch::{BlochVector, SphereAverageSpec};
pub use error::{Error, Result};
pub use estimators::{AxisCounts, EstimatorKind, EstimatorSpec, OutcomeCounts};
pub use montecarlo::{ErrorReport, TrialPlan};
pub use povm::{Effect, Povm, SharpnessTriple, ValidityReport};
