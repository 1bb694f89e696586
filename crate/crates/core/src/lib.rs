//! The (1+(λ,λ)) genetic algorithm on generalized OneMax.
//!
//! The crate provides the algorithm with exact evaluation accounting
//! ([`engine`]), the bit-string substrate ([`bitspace`]), the samplers and
//! exact pmfs it relies on ([`sampling`], [`rng`]), one-iteration drift
//! probes and exact enumeration oracles ([`drift`]), closed-form runtime
//! predictors ([`analysis`]) and a deterministic parallel experiment
//! harness ([`sweep`]).

pub mod analysis;
pub mod bitspace;
pub mod drift;
pub mod engine;
pub mod error;
pub mod rng;
pub mod sampling;
pub mod sweep;

pub use bitspace::{BitAccounting, BitString, OneMaxInstance};
pub use engine::{run, run_opo_ea, GaParams, RunOutcome, Variant};
pub use error::{Error, Result};
pub use rng::RngStream;
