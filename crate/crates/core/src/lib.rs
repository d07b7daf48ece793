//! Numerical workbench for modified Einstein tensors `Ein_k = Scal·g − k·Ric`
//! on explicit Riemannian metrics.

pub mod chart;
pub mod curvature;
pub mod error;
pub mod families;
pub mod hyperdual;
pub mod integrals;
pub mod invariants;
pub mod sampling;
pub mod tensors;
pub mod verify;

pub use error::{Error, Result};
