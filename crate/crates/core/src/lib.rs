//! Computable Hölder analysis on the Heisenberg group.
//!
//! Modules follow the mathematical layering: pointwise exterior algebra,
//! the group itself, sampled Hölder data, Young integrals, planar winding
//! numbers, horizontal lifts and spectral Hodge theory on flat tori.

pub mod cli;
pub mod error;
pub mod exterior;
pub mod heisenberg;
pub mod hodge;
pub mod holder;
pub mod horizontal;
pub mod planar;
mod quadrature;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
