//! Simulation core for autonomous quantum machines: absorption refrigerators,
//! ladder clocks, switches and dispersive couplings under open-system dynamics,
//! together with the figures of merit used to judge them.

pub mod dynamics;
pub mod error;
pub mod machines;
pub mod nonmarkov;
pub mod operator;
pub mod trajectories;

pub use error::{Error, Result};
