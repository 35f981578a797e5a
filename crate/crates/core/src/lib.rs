//! Bond-based peridynamics with linear finite elements and central-difference
//! time stepping.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod output;
pub mod potential;
pub mod sparse;
pub mod stability;
pub mod verification;

pub use error::{Error, Result};
