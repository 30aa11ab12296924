//! Cube structures of concrete minimal dynamical systems at desk scale:
//! finite inner approximations of dynamical parallelepipeds and face-orbit
//! closures, regionally-proximal estimation, and saturation experiments
//! with convergence diagnostics.

pub mod cube;
mod engine;
pub mod experiment;
pub mod error;
pub mod mod1;
pub mod relations;
pub mod saturation;
pub mod sampler;
pub mod spaces;

pub use error::{Error, Result};
