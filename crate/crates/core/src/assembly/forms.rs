use nalgebra::DMatrix;

use super::{interp_in, sum_elements, MassMatrix, MassMode, ModelKind, Peridynamics};
use crate::geometry::quadrature::force_rule;
use crate::geometry::{dot, interpolate, FeField, Mesh, Point};

impl Peridynamics {
    /// Visits every (element Gauss point, bond) pair whose tapers do not
    /// vanish. The callback receives the Gauss weight times the element
    /// measure times the bond weight and taper product, `x`, `y`, the bond
    /// direction and the physical bond length.
    fn for_each_pair<G>(&self, mesh: &Mesh, e: usize, mut g: G)
    where
        G: FnMut(f64, Point, Point, Point, f64),
    {
        let eps = self.epsilon();
        let meas = mesh.element_measure(e);
        for (bary, wg) in force_rule(mesh.dim()) {
            let x = mesh.point_in_element(e, bary);
            let wx = self.omega(x);
            if wx == 0.0 {
                continue;
            }
            for b in self.table.bonds() {
                let y = [x[0] + eps * b.xi[0], x[1] + eps * b.xi[1]];
                let wy = self.omega(y);
                if wy == 0.0 {
                    continue;
                }
                g(wg * meas * b.weight * wx * wy * b.j, x, y, b.dir, eps * b.len);
            }
        }
    }

    /// `a(u, v)`: the form with `(-grad PD(u), v) = -a(u, v)`, evaluated by
    /// interpolating both fields at every quadrature point.
    pub fn bilinear_a(&self, u: &FeField<'_>, v: &FeField<'_>, model: ModelKind) -> f64 {
        let mesh = u.mesh();
        self.check_mesh(mesh);
        let pref = 2.0 * self.base_factor();
        pref * sum_elements(mesh, self.parallel, |e| {
            let mut acc = 0.0;
            self.for_each_pair(mesh, e, |w, x, y, dir, len| {
                let (ux, uy) = (interpolate(u, x), interpolate(u, y));
                let (vx, vy) = (interpolate(v, x), interpolate(v, y));
                let su = dot([uy[0] - ux[0], uy[1] - ux[1]], dir) / len;
                let dv = dot([vy[0] - vx[0], vy[1] - vx[1]], dir);
                acc += w * self.kernel(model, len, su) * dv;
            });
            acc
        })
    }

    /// Linearized form `a_l(u, v)`.
    pub fn bilinear_a_linear(&self, u: &FeField<'_>, v: &FeField<'_>) -> f64 {
        self.bilinear_a(u, v, ModelKind::Linear)
    }

    /// Peridynamic potential energy of the interpolated field. The linear
    /// model uses the quadratic energy `a_l(u, u) / 2`.
    pub fn potential_energy(&self, u: &FeField<'_>, model: ModelKind) -> f64 {
        let mesh = u.mesh();
        self.check_mesh(mesh);
        let values = u.values();
        self.base_factor()
            * sum_elements(mesh, self.parallel, |e| {
                let mut acc = 0.0;
                self.for_each_pair(mesh, e, |w, x, y, dir, len| {
                    let ux = match mesh.locate(x) {
                        Some(l) => interp_in(mesh, values, l.element, &l.bary),
                        None => [0.0; 2],
                    };
                    let uy = match mesh.locate(y) {
                        Some(l) => interp_in(mesh, values, l.element, &l.bary),
                        None => [0.0; 2],
                    };
                    let s = dot([uy[0] - ux[0], uy[1] - ux[1]], dir) / len;
                    acc += w * match model {
                        ModelKind::Nonlinear => self.spec.f_unchecked(len * s * s),
                        ModelKind::Linear => self.spec.f_prime_zero() * len * s * s,
                    };
                });
                acc
            })
    }

    /// Dense matrix of `a_l(phi_j, phi_i)` over all degrees of freedom,
    /// built from outer products of basis-function bond elongations.
    pub fn stiffness_dense_linear(&self, mesh: &Mesh) -> DMatrix<f64> {
        self.check_mesh(mesh);
        let d = mesh.dim();
        let n = mesh.n_dofs();
        let pref = 2.0 * self.base_factor() * self.spec.f_prime_zero();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut g: Vec<(usize, f64)> = Vec::with_capacity(2 * (d + 1) * d);
        for e in 0..mesh.n_elements() {
            self.for_each_pair(mesh, e, |w, x, y, dir, len| {
                g.clear();
                for (loc, sign) in [(mesh.locate(x), -1.0), (mesh.locate(y), 1.0)] {
                    let Some(l) = loc else { continue };
                    for (k, &node) in mesh.element(l.element).iter().enumerate() {
                        for c in 0..d {
                            g.push((node * d + c, sign * l.bary[k] * dir[c]));
                        }
                    }
                }
                let coef = pref * w / len;
                for &(i, gi) in &g {
                    for &(j, gj) in &g {
                        a[(i, j)] += coef * gi * gj;
                    }
                }
            });
        }
        a
    }
}

/// Kinetic, potential and total energy of a displacement/velocity pair.
pub fn energies(
    pd: &Peridynamics,
    mass: &MassMatrix,
    mass_mode: MassMode,
    u: &FeField<'_>,
    v: &FeField<'_>,
    model: ModelKind,
) -> (f64, f64, f64) {
    let kinetic = 0.5 * mass.inner(v.values(), v.values(), mass_mode);
    let potential = pd.potential_energy(u, model);
    (kinetic, potential, kinetic + potential)
}
