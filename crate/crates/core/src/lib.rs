//! Two-stage robust kidney exchange with budgeted vertex and arc failures.
//!
//! The first stage picks a matching of cycles and chains; an adversary then
//! fails up to `r_v` vertices and `r_a` arcs; the second stage re-matches
//! within a recourse policy. [`robust_model::solve_robust`] maximizes the
//! worst-case number of recourse transplants among first-stage pairs.

pub mod bip;
pub mod enumeration;
pub mod fixtures;
pub mod generator;
pub mod heuristic;
pub mod instance;
pub mod master;
pub mod oracle;
pub mod recourse;
pub mod robust_model;
pub mod scalar;
pub mod scenario;
pub mod second_stage;
pub mod trace;

pub use enumeration::{ExchangeUnit, FirstStageSolution, Policy, PolicyUnitSets};
pub use instance::CompatibilityGraph;
pub use scenario::{Budget, Scenario};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;
/// Floating-point linear program used on the fast path.
pub type FloatLp = bip::simplex::LinearProgram<f64>;
/// Single-precision linear program.
pub type Float32Lp = bip::simplex::LinearProgram<f32>;
/// Linear program over exact rationals.
pub type ExactLp = bip::simplex::LinearProgram<Rational>;
