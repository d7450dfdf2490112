//! Constructive Paley projections on anisotropic Sobolev spaces `W^S_1(T^d)`:
//! Property (O) search, lacunary sequences, Riesz products, the projection
//! operators and numerical checks of the finite-size identities.

pub mod cli;
pub mod cr_norm;
pub mod error;
pub mod json;
pub mod multiindex;
pub mod operators;
pub mod pipeline;
pub mod property_o;
pub mod riesz;
pub mod rng;
pub mod sequence;
pub mod trigpoly;

pub use error::{Error, Result};
