use rayon::prelude::*;

use super::{interp_in, scatter_elements, ModelKind, Peridynamics};
use crate::geometry::quadrature::force_rule;
use crate::geometry::{dot, DisplacementField, FeField, Mesh, Point};

impl Peridynamics {
    /// Peridynamic force density `-grad PD(u)` at `x`, by quadrature over
    /// the horizon table.
    pub fn pd_force_at_point<F: DisplacementField + ?Sized>(
        &self,
        field: &F,
        x: Point,
        model: ModelKind,
    ) -> Point {
        let wx = self.omega(x);
        if wx == 0.0 {
            return [0.0; 2];
        }
        let eps = self.epsilon();
        let ux = field.displacement(x);
        let mut acc = [0.0; 2];
        for b in self.table.bonds() {
            let y = [x[0] + eps * b.xi[0], x[1] + eps * b.xi[1]];
            let wy = self.omega(y);
            if wy == 0.0 {
                continue;
            }
            let uy = field.displacement(y);
            let len = eps * b.len;
            let s = dot([uy[0] - ux[0], uy[1] - ux[1]], b.dir) / len;
            let c = b.weight * wy * b.j * self.kernel(model, len, s);
            acc[0] += c * b.dir[0];
            acc[1] += c * b.dir[1];
        }
        let scale = 4.0 * self.base_factor() * wx;
        [scale * acc[0], scale * acc[1]]
    }

    /// Linearized force density at `x`.
    pub fn pd_force_linear_at_point<F: DisplacementField + ?Sized>(&self, field: &F, x: Point) -> Point {
        self.pd_force_at_point(field, x, ModelKind::Linear)
    }

    /// Force density at every mesh node, laid out as `node * d + comp`.
    pub fn nodal_force_strong<F: DisplacementField + ?Sized>(
        &self,
        field: &F,
        mesh: &Mesh,
        model: ModelKind,
    ) -> Vec<f64> {
        self.check_mesh(mesh);
        let d = mesh.dim();
        let eval = |i: usize| self.pd_force_at_point(field, mesh.node(i), model);
        let forces: Vec<Point> = if self.parallel {
            (0..mesh.n_nodes()).into_par_iter().map(eval).collect()
        } else {
            (0..mesh.n_nodes()).map(eval).collect()
        };
        let mut out = vec![0.0; mesh.n_dofs()];
        for (i, f) in forces.iter().enumerate() {
            out[i * d..i * d + d].copy_from_slice(&f[..d]);
        }
        out
    }

    /// Weak peridynamic force vector `F_i = -dPD_h/dU_i`, where `PD_h` is the
    /// element-quadrature approximation of the potential energy of the
    /// interpolated field. Pairing with a nodal vector `V` gives `-a(u, v)`.
    pub fn weak_force(&self, field: &FeField<'_>, model: ModelKind) -> Vec<f64> {
        let mesh = field.mesh();
        self.check_mesh(mesh);
        let values = field.values();
        let d = mesh.dim();
        let eps = self.epsilon();
        let pref = 2.0 * self.base_factor();
        let rule = force_rule(d);
        scatter_elements(mesh, mesh.n_dofs(), self.parallel, |e, out| {
            let meas = mesh.element_measure(e);
            for (bary_g, wg) in rule {
                let xg = mesh.point_in_element(e, bary_g);
                let wx = self.omega(xg);
                if wx == 0.0 {
                    continue;
                }
                let ug = interp_in(mesh, values, e, bary_g);
                let gauss = pref * wg * meas * wx;
                let mut local = [0.0; 2];
                for b in self.table.bonds() {
                    let y = [xg[0] + eps * b.xi[0], xg[1] + eps * b.xi[1]];
                    let wy = self.omega(y);
                    if wy == 0.0 {
                        continue;
                    }
                    let Some(loc) = mesh.locate(y) else { continue };
                    let uy = interp_in(mesh, values, loc.element, &loc.bary);
                    let len = eps * b.len;
                    let s = dot([uy[0] - ug[0], uy[1] - ug[1]], b.dir) / len;
                    let c = gauss * b.weight * wy * b.j * self.kernel(model, len, s);
                    for (k, &n) in mesh.element(loc.element).iter().enumerate() {
                        for comp in 0..d {
                            out[n * d + comp] -= c * loc.bary[k] * b.dir[comp];
                        }
                    }
                    local[0] += c * b.dir[0];
                    local[1] += c * b.dir[1];
                }
                for (k, &n) in mesh.element(e).iter().enumerate() {
                    for comp in 0..d {
                        out[n * d + comp] += bary_g[k] * local[comp];
                    }
                }
            }
        })
    }

    /// Weak force plus the load vector of the body force `b`.
    pub fn assemble_weak_force<B>(&self, field: &FeField<'_>, body: B, model: ModelKind) -> Vec<f64>
    where
        B: Fn(Point) -> Point + Sync,
    {
        let mut f = self.weak_force(field, model);
        for (fi, li) in f.iter_mut().zip(load_vector(field.mesh(), body, self.parallel)) {
            *fi += li;
        }
        f
    }
}

/// `L_i = int phi_i b dx` by element Gauss quadrature.
pub fn load_vector<B>(mesh: &Mesh, body: B, parallel: bool) -> Vec<f64>
where
    B: Fn(Point) -> Point + Sync,
{
    let d = mesh.dim();
    let rule = force_rule(d);
    scatter_elements(mesh, mesh.n_dofs(), parallel, |e, out| {
        let meas = mesh.element_measure(e);
        for (bary, w) in rule {
            let b = body(mesh.point_in_element(e, bary));
            for (k, &n) in mesh.element(e).iter().enumerate() {
                for comp in 0..d {
                    out[n * d + comp] += w * meas * bary[k] * b[comp];
                }
            }
        }
    })
}
