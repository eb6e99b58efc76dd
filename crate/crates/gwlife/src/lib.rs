//! Galton-Watson processes in which individuals have random lifetimes.
//!
//! The library models a branching process where each individual lives a
//! random number of generations and reproduces once, at death. The age-typed
//! embedding turns this into a countable-type process whose mean matrix has
//! a computable convergence norm; from it follow recurrence classification,
//! invariant vectors and measures, extinction probabilities, growth
//! constants, finite truncations, and Monte Carlo simulation.

pub mod distributions;
pub mod extinction;
pub mod extreal;
pub mod modelspec;
pub mod rootfind;
pub mod series;
pub mod simulator;
pub mod spectral;
pub mod truncation;

pub use distributions::{LifetimeModel, LifetimeSpec, ModelError, OffspringModel, OffspringSpec};
pub use extreal::ExtReal;
pub use modelspec::{ModelSpec, SpecError};
