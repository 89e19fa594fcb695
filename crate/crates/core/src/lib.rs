//! Numerical lab for local perturbations of time-1 maps of Anosov flows.

pub mod bump;
pub mod config;
pub mod error;
pub mod gibbs;
pub mod lyapunov;
pub mod perturbation;
pub mod runner;
pub mod rng;
pub mod splitting;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
