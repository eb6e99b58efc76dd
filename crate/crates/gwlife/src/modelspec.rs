//! JSON wire format for model specifications.
//!
//! A model spec is an object with two keys, `offspring` and `lifetime`, each
//! tagged by `kind`:
//!
//! ```json
//! {
//!   "offspring": {"kind": "pmf", "p": [0.0, 0.0, 1.0]},
//!   "lifetime":  {"kind": "geometric", "mean": 1.0}
//! }
//! ```
//!
//! Offspring kinds: `pmf`, `geometric`, `poisson`, `point`.
//! Lifetime kinds: `pmf`, `geometric`, `power_tilt`.
//! Unknown kinds and unknown fields are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{
    make_lifetime, make_offspring, LifetimeModel, LifetimeSpec, ModelError, OffspringModel,
    OffspringSpec,
};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffspringSpecJson {
    Pmf { p: Vec<f64> },
    Geometric { mean: f64 },
    Poisson { mean: f64 },
    Point { value: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LifetimeSpecJson {
    Pmf { h: Vec<f64> },
    Geometric { mean: f64 },
    PowerTilt { a: f64, b: f64 },
}

/// Top-level model spec document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub offspring: OffspringSpecJson,
    pub lifetime: LifetimeSpecJson,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("malformed model spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid offspring distribution: {0}")]
    Offspring(ModelError),
    #[error("invalid lifetime distribution: {0}")]
    Lifetime(ModelError),
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn offspring_spec(&self) -> OffspringSpec {
        match &self.offspring {
            OffspringSpecJson::Pmf { p } => OffspringSpec::Pmf(p.clone()),
            OffspringSpecJson::Geometric { mean } => OffspringSpec::Geometric { mean: *mean },
            OffspringSpecJson::Poisson { mean } => OffspringSpec::Poisson { mean: *mean },
            OffspringSpecJson::Point { value } => OffspringSpec::Point { value: *value },
        }
    }

    pub fn lifetime_spec(&self) -> LifetimeSpec {
        match &self.lifetime {
            LifetimeSpecJson::Pmf { h } => LifetimeSpec::Pmf(h.clone()),
            LifetimeSpecJson::Geometric { mean } => LifetimeSpec::Geometric { mean: *mean },
            LifetimeSpecJson::PowerTilt { a, b } => LifetimeSpec::PowerTilt { a: *a, b: *b },
        }
    }

    /// Validate and build both models.
    pub fn build(&self) -> Result<(OffspringModel, LifetimeModel), SpecError> {
        let off = make_offspring(&self.offspring_spec()).map_err(SpecError::Offspring)?;
        let life = make_lifetime(&self.lifetime_spec()).map_err(SpecError::Lifetime)?;
        Ok((off, life))
    }
}

/// Parse and build in one step.
pub fn parse_and_build(text: &str) -> Result<(OffspringModel, LifetimeModel), SpecError> {
    ModelSpec::from_json(text)?.build()
}
