//! Peridynamic forces, finite-element mass, bilinear forms and energies.

mod forms;
mod force;
mod mass;

pub use force::load_vector;
pub use forms::energies;
pub use mass::{assemble_mass, l2_project, l2_project_with, MassMatrix, MassMode, ProjectionMode};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{taper_omega, BoxDomain, HorizonTable, Mesh, Point};
use crate::potential::{unit_ball_volume, PotentialSpec};

/// Nonlinear bond force `f'(|y-x| S^2) S` or its linearization `f'(0) S`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelKind {
    #[default]
    Nonlinear,
    Linear,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Nonlinear => "nonlinear",
            ModelKind::Linear => "linear",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nonlinear" => Ok(ModelKind::Nonlinear),
            "linear" => Ok(ModelKind::Linear),
            _ => Err(format!("unknown model `{s}` (expected nonlinear or linear)")),
        }
    }
}

/// Material, horizon quadrature and domain shared by every force evaluation.
#[derive(Clone, Debug)]
pub struct Peridynamics {
    spec: PotentialSpec,
    table: HorizonTable,
    domain: BoxDomain,
    parallel: bool,
}

impl Peridynamics {
    pub fn new(spec: PotentialSpec, table: HorizonTable, domain: BoxDomain) -> Result<Self> {
        if table.dim() != domain.dim() || spec.dim != domain.dim() {
            return Err(Error::domain(format!(
                "dimension mismatch: potential {}, horizon {}, domain {}",
                spec.dim,
                table.dim(),
                domain.dim()
            )));
        }
        if table.epsilon() >= domain.min_extent() {
            return Err(Error::domain(format!(
                "horizon {} must be smaller than the box extent {}",
                table.epsilon(),
                domain.min_extent()
            )));
        }
        Ok(Peridynamics {
            spec,
            table,
            domain,
            parallel: true,
        })
    }

    /// Toggles data-parallel loops. Results are bit-identical either way.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    /// Same model with a different horizon table.
    pub fn with_table(&self, table: HorizonTable) -> Result<Self> {
        Ok(Peridynamics::new(self.spec, table, self.domain)?.with_parallel(self.parallel))
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn table(&self) -> &HorizonTable {
        &self.table
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn epsilon(&self) -> f64 {
        self.table.epsilon()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    #[inline]
    pub(crate) fn omega(&self, x: Point) -> f64 {
        taper_omega(x, self.epsilon(), &self.domain)
    }

    /// `1 / (eps * omega_d)`, the common prefactor of the horizon integrals
    /// once the volume element `eps^d` is absorbed into the unit-ball weights.
    #[inline]
    pub(crate) fn base_factor(&self) -> f64 {
        1.0 / (self.epsilon() * unit_ball_volume(self.dim()))
    }

    /// Scalar bond force for physical bond length `len` and strain `s`.
    #[inline]
    pub(crate) fn kernel(&self, model: ModelKind, len: f64, s: f64) -> f64 {
        match model {
            ModelKind::Nonlinear => self.spec.df(len * s * s) * s,
            ModelKind::Linear => self.spec.f_prime_zero() * s,
        }
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) {
        assert_eq!(mesh.dim(), self.dim(), "mesh dimension does not match the model");
    }
}

/// Barycentric interpolation of nodal values inside a known element.
#[inline]
pub(crate) fn interp_in(mesh: &Mesh, values: &[f64], e: usize, bary: &[f64; 3]) -> Point {
    let d = mesh.dim();
    let mut u = [0.0; 2];
    for (k, &n) in mesh.element(e).iter().enumerate() {
        for c in 0..d {
            u[c] += bary[k] * values[n * d + c];
        }
    }
    u
}

/// Runs `f` over every element and sums the per-element contributions to a
/// vector of length `len`. Elements are processed in fixed chunks whose
/// partial sums are added in chunk order, so the result does not depend on
/// the number of worker threads.
pub(crate) fn scatter_elements<F>(mesh: &Mesh, len: usize, parallel: bool, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    const MAX_CHUNKS: usize = 32;
    let ne = mesh.n_elements();
    let chunk = ne.div_ceil(MAX_CHUNKS).max(16);
    let n_chunks = ne.div_ceil(chunk);
    let run = |c: usize| {
        let mut out = vec![0.0; len];
        for e in c * chunk..((c + 1) * chunk).min(ne) {
            f(e, &mut out);
        }
        out
    };
    let parts: Vec<Vec<f64>> = if parallel {
        (0..n_chunks).into_par_iter().map(run).collect()
    } else {
        (0..n_chunks).map(run).collect()
    };
    let mut total = vec![0.0; len];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Same as [`scatter_elements`] for a scalar sum.
pub(crate) fn sum_elements<F>(mesh: &Mesh, parallel: bool, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const MAX_CHUNKS: usize = 32;
    let ne = mesh.n_elements();
    let chunk = ne.div_ceil(MAX_CHUNKS).max(16);
    let n_chunks = ne.div_ceil(chunk);
    let run = |c: usize| (c * chunk..((c + 1) * chunk).min(ne)).map(&f).sum::<f64>();
    let parts: Vec<f64> = if parallel {
        (0..n_chunks).into_par_iter().map(run).collect()
    } else {
        (0..n_chunks).map(run).collect()
    };
    parts.into_iter().sum()
}
