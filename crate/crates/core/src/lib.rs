//! Quantifies what an attacker coalition learns about target inputs from the
//! public output of a multi-party computation, and finds noise distributions
//! for a virtual input that maximise the targets' remaining entropy under a
//! bounded output distortion.

pub mod cli;
pub mod config;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod expr;
pub mod extended;
pub mod leakage;
pub mod numeric;
pub mod optimizer;
pub mod randomization;

pub use error::{Error, Result};
