//! Bayesian Skip-gram word embeddings with Gaussian posteriors, baselines,
//! evaluation tasks and reference oracles.

pub mod baselines;
pub mod bsg;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gauss;
pub mod optim;
pub mod oracles;
pub mod real;
pub mod table;
pub mod trainer;

pub use config::{Energy, ModelKind, Objective, Pairing, TrainConfig};
pub use error::{Error, ErrorKind, Result};
pub use gauss::{CovKind, Gaussian};
