//! Desk-scale simulator and optimizer for 5G mmWave initial access.
//!
//! The crate reproduces one pipeline end to end: synthesize an
//! expert-style SSB beam pool, sweep clustered user deployments during
//! cell search, and learn per-sector n-of-m codebooks with a REINFORCE
//! actor-critic, benchmarked against expert, max-of-experts, greedy,
//! random, and brute-force baselines.
//!
//! Start from the runnable examples (`cargo run --example ...`) or the
//! `ssbsim` binary; the modules below mirror the pipeline stages.

pub mod beams;
pub mod cellsearch;
pub mod cli;
pub mod config;
pub mod error;
pub mod kernels;
pub mod neuralnet;
pub mod propagation;
pub mod rng;
pub mod scenario;
pub mod agent;
pub mod solvers;
pub mod trainer;
pub mod evaluation;

pub use error::{Error, Result};
