pub mod cli;
pub mod ensemble;
pub mod error;
pub mod hamiltonians;
pub mod pulse;
pub mod spectrum;
pub mod transitions;
pub mod spin_core;

pub use error::{Error, Result};
