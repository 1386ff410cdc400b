//! Stochastic dynamic programming model of a hydrogen storage buffer between
//! a renewable producer, a local consumer and a capacity-limited grid.

pub mod config;
pub mod dynamics;
pub mod experiments;
pub mod error;
pub mod grid;
pub mod model;
pub mod simulator;
pub mod solver;
pub mod stochastics;

pub use config::{FuelCellMode, SystemConfig};
pub use error::{Error, Result};
pub use grid::{GridResolution, Grids, YSupport};
pub use model::Model;
