//! Two-component mixed linear regression: spectral initialization, EM-style
//! alternating minimization, numerical lemma checks, and a Monte-Carlo harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimator;
pub mod exec;
pub mod harness;
pub mod initializer;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{error_metric, loss, run_em, EmOptions, EmTrace, EstimatePair};
pub use exec::Execution;
pub use initializer::{grid_init, proportion_init, random_init, GridConfig, InitMethod, MomentSpectrum};
pub use model::{generate, MixtureModel, Observations, SampleSet};
