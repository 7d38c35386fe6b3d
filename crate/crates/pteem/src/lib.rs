//! Command-line front end for `pteem-core`: configuration, file formats and
//! a parallel driver for the three bundled experiments.

pub mod cli;
pub mod config;
pub mod diagnose;
pub mod error;
pub mod experiments;
pub mod fasta;
pub mod format;
pub mod output;

pub use pteem_core as core;
