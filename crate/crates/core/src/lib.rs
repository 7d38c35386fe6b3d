//! Population-based MCMC: parallel tempering (PT), the equi-energy sampler
//! (EES) and parallel tempering with equi-energy moves (PTEEM).
//!
//! The crate is `no_std` with `alloc`. Everything that touches files, the
//! command line or threads lives in the companion `pteem` crate.
//!
//! Layout:
//! - [`model`]: target densities, energies and the tempered family.
//! - [`ladders`]: temperature/energy ladders, ring assignment, ring
//!   occupancy diagnostics.
//! - [`kernels`]: local moves (random-walk Metropolis, Gibbs contract).
//! - [`engines`]: the PT, EES and PTEEM drivers and their traces.
//! - [`experiments`]: the 2-D Gaussian mixture, Galaxy mixture and motif
//!   discovery benchmarks.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod discrete;
pub mod engines;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod ladders;
pub mod math;
pub mod model;
pub mod rng;

pub use error::{ConfigError, EngineError, ModelError};
