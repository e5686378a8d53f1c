pub mod config;
pub mod elastic;
pub mod energy;
pub mod error;
pub mod field;
pub mod maier_saupe;
pub mod minimizer;
pub mod qtensor;
pub mod verifier;

pub use error::{Error, Result};
