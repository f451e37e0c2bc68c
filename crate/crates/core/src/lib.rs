//! Conversational dueling bandits with generalized linear feedback, their
//! multinomial-logit assortment extension, baselines, simulated and
//! dataset-derived environments, and a deterministic experiment runner.

pub mod conduel;
pub mod conmnl;
pub mod envsim;
pub mod error;
pub mod estimator;
pub mod glm;
pub mod ingest;
pub mod policy;
pub mod rng;
pub mod spanner;

pub use error::{Error, Result};
pub use glm::{DesignMatrix, Feature, LinkFunction, WeightGraph};
pub use policy::{Algorithm, ArmPool, KeytermCatalog, Policy, PolicyConfig};
