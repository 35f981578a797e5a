//! Meshes, finite-element fields, the boundary taper and horizon quadrature.

mod field;
mod horizon;
mod mesh;
pub mod quadrature;

pub use field::{interpolate, strain, taper_omega, Analytic, DisplacementField, FeField};
pub use horizon::{build_horizon_quadrature, default_lattice_refinement, Bond, HorizonTable};
pub use mesh::{build_uniform_mesh, BoxDomain, Location, Mesh};

/// Coordinates and displacement vectors. One-dimensional problems leave the
/// second component at zero.
pub type Point = [f64; 2];

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}
