pub mod cepstrum;
pub mod error;
pub mod filter;
pub mod model;
pub mod runtime;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
