pub mod dtn;
pub mod eos;
pub mod evolution;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod norms;
pub mod paradiff;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
