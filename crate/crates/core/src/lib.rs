//! Physics-informed neural solver for the ground state of the hydrogen
//! molecular ion H₂⁺, with independent reference solvers.

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod physics;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
