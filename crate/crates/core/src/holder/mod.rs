//! Sampled Hölder data: paths, grids, seminorms, mollification, the concave
//! modulus and the layered-mollification extension to a half-plane.

mod extension;
mod grid;
mod kernel;
mod modulus;
mod mollify;
mod path;
mod seminorm;

pub use extension::{cutoff, cutoff_deriv, extension_gradient, extension_gradient_sup, gagliardo_extend, Extension};
pub use grid::{fd_partial, GridMap};
pub use kernel::{bump, bump_deriv, MollifierKernel};
pub use modulus::{concave_modulus, ConcaveModulus};
pub use mollify::{
    convolve_line, derivative_weights, differentiate_line, mollify, mollify_derivative, mollify_grid,
    mollify_grid_gradient, smoothing_weights, Boundary, Mollified,
};
pub use path::{weierstrass_field, weierstrass_path, weierstrass_spiral, SampledPath};
pub use seminorm::{
    estimate_holder_exponent, grid_seminorm, holder_seminorm, ls_slope, oscillation_at_lags, TargetMetric,
};
