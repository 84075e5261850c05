pub mod basis;
pub mod chebyshev;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod jet;
pub mod model;
pub mod optim;
pub mod problems;
pub mod trainer;
pub mod verify;

pub use error::{CsnnError, Result};
