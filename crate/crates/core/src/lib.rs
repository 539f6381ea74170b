pub mod bessel;
pub mod concentration;
pub mod config;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod ground_state;
pub mod quadrature;
pub mod runner;
pub mod threshold;
pub mod virial;

pub use error::{Error, Result};
