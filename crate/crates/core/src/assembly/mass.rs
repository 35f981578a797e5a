use std::fmt;
use std::str::FromStr;

use crate::error::Result;
use crate::geometry::quadrature::accurate_rule;
use crate::geometry::{Mesh, Point};
use crate::sparse::{conjugate_gradient, CgInfo, CsrMatrix};

/// Relative residual used for mass solves unless overridden.
pub const DEFAULT_MASS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MassMode {
    #[default]
    Consistent,
    Lumped,
}

impl fmt::Display for MassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassMode::Consistent => "consistent",
            MassMode::Lumped => "lumped",
        })
    }
}

impl FromStr for MassMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "consistent" => Ok(MassMode::Consistent),
            "lumped" => Ok(MassMode::Lumped),
            _ => Err(format!("unknown mass mode `{s}` (expected consistent or lumped)")),
        }
    }
}

/// Finite-element mass matrix with its lumped variant and the
/// Dirichlet-constrained copy used in time stepping.
#[derive(Clone, Debug)]
pub struct MassMatrix {
    full: CsrMatrix,
    constrained_matrix: CsrMatrix,
    lumped: Vec<f64>,
    constrained: Vec<bool>,
    tol: f64,
}

/// Exact element mass matrices, replicated per displacement component.
pub fn assemble_mass(mesh: &Mesh) -> MassMatrix {
    let d = mesh.dim();
    let k = d + 1;
    let mut t = Vec::with_capacity(mesh.n_elements() * k * k * d);
    for e in 0..mesh.n_elements() {
        let meas = mesh.element_measure(e);
        let (diag, off) = if d == 1 {
            (meas / 3.0, meas / 6.0)
        } else {
            (meas / 6.0, meas / 12.0)
        };
        let el = mesh.element(e);
        for (a, &na) in el.iter().enumerate() {
            for (b, &nb) in el.iter().enumerate() {
                let v = if a == b { diag } else { off };
                for c in 0..d {
                    t.push((na * d + c, nb * d + c, v));
                }
            }
        }
    }
    let full = CsrMatrix::from_triplets(mesh.n_dofs(), t);
    let constrained = mesh.constrained_dofs();
    let constrained_matrix = full.with_identity_rows(&constrained);
    let lumped = full.row_sums();
    MassMatrix {
        full,
        constrained_matrix,
        lumped,
        constrained,
        tol: DEFAULT_MASS_TOL,
    }
}

impl MassMatrix {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn lumped(&self) -> &[f64] {
        &self.lumped
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn n(&self) -> usize {
        self.full.n()
    }

    pub fn mul(&self, x: &[f64], mode: MassMode) -> Vec<f64> {
        match mode {
            MassMode::Consistent => self.full.mul_vec(x),
            MassMode::Lumped => x.iter().zip(&self.lumped).map(|(a, m)| a * m).collect(),
        }
    }

    /// `x^T M y`.
    pub fn inner(&self, x: &[f64], y: &[f64], mode: MassMode) -> f64 {
        crate::sparse::dot(x, &self.mul(y, mode))
    }

    /// Solves `M x = rhs` on the unconstrained entries with `x = 0` on
    /// constrained ones. `x` holds the initial guess on entry.
    pub fn solve_dirichlet(&self, rhs: &[f64], x: &mut [f64], mode: MassMode) -> Result<CgInfo> {
        let mut b = rhs.to_vec();
        for (bi, &c) in b.iter_mut().zip(&self.constrained) {
            if c {
                *bi = 0.0;
            }
        }
        self.solve_with(&self.constrained_matrix, &b, x, mode, Some(&self.constrained))
    }

    /// Solves `M x = rhs` without boundary constraints.
    pub fn solve_full(&self, rhs: &[f64], x: &mut [f64], mode: MassMode) -> Result<CgInfo> {
        self.solve_with(&self.full, rhs, x, mode, None)
    }

    fn solve_with(
        &self,
        a: &CsrMatrix,
        rhs: &[f64],
        x: &mut [f64],
        mode: MassMode,
        mask: Option<&[bool]>,
    ) -> Result<CgInfo> {
        match mode {
            MassMode::Consistent => conjugate_gradient(a, rhs, x, self.tol, 10 * a.n()),
            MassMode::Lumped => {
                for i in 0..x.len() {
                    let fixed = mask.is_some_and(|m| m[i]);
                    x[i] = if fixed { 0.0 } else { rhs[i] / self.lumped[i] };
                }
                Ok(CgInfo {
                    iterations: 0,
                    relative_residual: 0.0,
                })
            }
        }
    }
}

/// Whether a projection keeps boundary values free or fixes them at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Projection onto the whole finite-element space.
    #[default]
    Full,
    /// Projection onto fields vanishing on the boundary.
    Homogeneous,
}

/// L2 projection of `exact` onto the linear finite-element space.
pub fn l2_project<F>(exact: F, mesh: &Mesh, mode: ProjectionMode) -> Result<Vec<f64>>
where
    F: Fn(Point) -> Point,
{
    l2_project_with(exact, mesh, &assemble_mass(mesh), mode)
}

/// As [`l2_project`] with a pre-assembled mass matrix.
pub fn l2_project_with<F>(exact: F, mesh: &Mesh, mass: &MassMatrix, mode: ProjectionMode) -> Result<Vec<f64>>
where
    F: Fn(Point) -> Point,
{
    let d = mesh.dim();
    let mut rhs = vec![0.0; mesh.n_dofs()];
    for e in 0..mesh.n_elements() {
        let meas = mesh.element_measure(e);
        for (bary, w) in accurate_rule(d) {
            let u = exact(mesh.point_in_element(e, bary));
            for (k, &n) in mesh.element(e).iter().enumerate() {
                for c in 0..d {
                    rhs[n * d + c] += w * meas * bary[k] * u[c];
                }
            }
        }
    }
    let mut x = vec![0.0; mesh.n_dofs()];
    match mode {
        ProjectionMode::Full => mass.solve_full(&rhs, &mut x, MassMode::Consistent)?,
        ProjectionMode::Homogeneous => mass.solve_dirichlet(&rhs, &mut x, MassMode::Consistent)?,
    };
    Ok(x)
}
