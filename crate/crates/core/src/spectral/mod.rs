//! Fourier (horizontal) and stretched Chebyshev (vertical) discretization.

mod column;
mod field;
mod torus;

pub use column::{Column, Phase};
pub use field::{BulkField, Mode, SlabGrid, SpectralField, Trig};
pub use torus::Torus;
