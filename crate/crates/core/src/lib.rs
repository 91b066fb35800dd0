//! Differential forms on Poisson configuration spaces over a compact surface.
//!
//! The base manifold is either the flat torus or the unit sphere. Point
//! configurations are sampled from a Poisson measure with smooth positive
//! intensity, and forms on configuration space are built from cylinder data
//! so that every operator has an exact finite-dimensional formula.

pub mod configuration;
pub mod cylinder;
pub mod diffusion;
pub mod error;
pub mod field;
pub mod integrate;
pub mod intensity;
pub mod linalg;
pub mod manifold;
pub mod outer;
pub mod preset;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use field::{OneFormField, ScalarField};
pub use manifold::{Manifold, ManifoldPoint, TangentVector};
