//! Acoustic scattering by sound-soft obstacles in the plane and shape
//! recovery from multi-frequency far-field data.

pub mod curve;
pub mod error;
pub mod forward;
pub mod hodlr;
pub mod inverse;
pub mod linalg;
pub mod manifest;
pub mod potentials;
pub mod quadrature;
pub mod rla;
pub mod specfun;
pub mod synth;

pub use error::{Error, Result};
