pub mod asymptotics;
pub mod config;
pub mod data;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod hartree;
pub mod inequalities;
pub mod mesh;
pub mod oracles;
pub mod quad;
pub mod report;
pub mod runner;
pub mod snapshot;
pub mod solver;
pub mod trajectory;
pub mod transforms;
pub mod transport;

pub use error::{LabError, Result};
