pub mod cli_io;
pub mod constants;
pub mod electrostatics;
pub mod error;
pub mod feasibility;
pub mod ion_crystal;
pub mod noise_model;
pub mod protocol_sim;
pub mod transduction;

pub use error::{Error, Result};
