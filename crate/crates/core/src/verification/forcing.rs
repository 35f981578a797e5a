use rayon::prelude::*;

use super::ManufacturedCase;
use crate::assembly::{ModelKind, Peridynamics};
use crate::dynamics::BodyForce;
use crate::geometry::quadrature::force_rule;
use crate::geometry::{dot, Analytic, Mesh, Point};

/// Chebyshev degree of the amplitude tables.
const CHEB_NODES: usize = 16;

/// Body force `b = d^2u/dt^2 - F(u)` making a manufactured case an exact
/// solution, where `F` is the peridynamic force evaluated with an oracle
/// horizon table.
///
/// For `u = g(t) X(x)` the force is `g G(g^2, x)` with `G` smooth in its
/// first argument, so `G` is tabulated once per point as a Chebyshev series
/// in `s = g^2`. Tables exist for the nodes of the mesh given at
/// construction and, optionally, its element quadrature points.
pub struct MmsForcing {
    case: ManufacturedCase,
    oracle: Peridynamics,
    model: ModelKind,
    s_max: f64,
    dim: usize,
    node_table: Vec<[[f64; CHEB_NODES]; 2]>,
    node_points: Vec<Point>,
    gauss_table: Option<Vec<[[f64; CHEB_NODES]; 2]>>,
}

impl MmsForcing {
    /// `oracle` is the model whose force defines `b` (typically the solver's
    /// model with a refined horizon table), `t_final` bounds the amplitude
    /// range, and `with_quadrature_points` also tabulates the element
    /// quadrature points needed by weak-form load vectors.
    pub fn new(
        case: ManufacturedCase,
        oracle: Peridynamics,
        model: ModelKind,
        mesh: &Mesh,
        t_final: f64,
        with_quadrature_points: bool,
    ) -> Self {
        let s_max = case.time.max_square(t_final);
        let mut f = MmsForcing {
            case,
            oracle,
            model,
            s_max,
            dim: mesh.dim(),
            node_table: Vec::new(),
            node_points: mesh.nodes().to_vec(),
            gauss_table: None,
        };
        f.node_table = f.tabulate(&f.node_points);
        if with_quadrature_points {
            let rule = force_rule(mesh.dim());
            let pts: Vec<Point> = (0..mesh.n_elements())
                .flat_map(|e| rule.iter().map(move |(b, _)| mesh.point_in_element(e, b)))
                .collect();
            f.gauss_table = Some(f.tabulate(&pts));
        }
        f
    }

    pub fn case(&self) -> &ManufacturedCase {
        &self.case
    }

    pub fn oracle(&self) -> &Peridynamics {
        &self.oracle
    }

    fn cheb_node(&self, j: usize) -> f64 {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / CHEB_NODES as f64;
        0.5 * self.s_max * (1.0 + theta.cos())
    }

    /// `G(s, x)` at the Chebyshev nodes, for all points.
    fn tabulate(&self, points: &[Point]) -> Vec<[[f64; CHEB_NODES]; 2]> {
        let nodes: Vec<f64> = (0..CHEB_NODES).map(|j| self.cheb_node(j)).collect();
        let run = |x: &Point| {
            let bonds = self.profile_bonds(*x);
            let samples: Vec<Point> = nodes.iter().map(|&s| self.sum_bonds(&bonds, s)).collect();
            let mut coeffs = [[0.0; CHEB_NODES]; 2];
            for (c, row) in coeffs.iter_mut().enumerate() {
                for (k, ck) in row.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (j, sample) in samples.iter().enumerate() {
                        let theta = std::f64::consts::PI * (j as f64 + 0.5) / CHEB_NODES as f64;
                        s += sample[c] * (k as f64 * theta).cos();
                    }
                    *ck = 2.0 * s / CHEB_NODES as f64;
                }
            }
            coeffs
        };
        if self.oracle.is_parallel() {
            points.par_iter().map(run).collect()
        } else {
            points.iter().map(run).collect()
        }
    }

    /// Per-bond `(scaled weight, length, profile strain, direction)` at `x`.
    fn profile_bonds(&self, x: Point) -> Vec<(f64, f64, f64, Point)> {
        let pd = &self.oracle;
        let wx = pd.omega(x);
        if wx == 0.0 {
            return Vec::new();
        }
        let eps = pd.epsilon();
        let profile = self.case.profile;
        let px = profile.eval(x);
        let scale = 4.0 * pd.base_factor() * wx;
        pd.table()
            .bonds()
            .iter()
            .filter_map(|b| {
                let y = [x[0] + eps * b.xi[0], x[1] + eps * b.xi[1]];
                let wy = pd.omega(y);
                if wy == 0.0 {
                    return None;
                }
                let py = profile.eval(y);
                let len = eps * b.len;
                let strain = dot([py[0] - px[0], py[1] - px[1]], b.dir) / len;
                Some((scale * b.weight * wy * b.j, len, strain, b.dir))
            })
            .collect()
    }

    fn sum_bonds(&self, bonds: &[(f64, f64, f64, Point)], s: f64) -> Point {
        let mut acc = [0.0; 2];
        for &(w, len, strain, dir) in bonds {
            let c = w * self.oracle.kernel(self.model, len * s, strain);
            acc[0] += c * dir[0];
            acc[1] += c * dir[1];
        }
        acc
    }

    fn clenshaw(&self, coeffs: &[[f64; CHEB_NODES]; 2], s: f64) -> Point {
        if self.s_max == 0.0 {
            return [0.5 * coeffs[0][0], 0.5 * coeffs[1][0]];
        }
        let x = (2.0 * s / self.s_max - 1.0).clamp(-1.0, 1.0);
        let mut out = [0.0; 2];
        for (c, row) in coeffs.iter().enumerate() {
            let (mut b1, mut b2) = (0.0, 0.0);
            for &ck in row.iter().skip(1).rev() {
                let b0 = 2.0 * x * b1 - b2 + ck;
                b2 = b1;
                b1 = b0;
            }
            out[c] = x * b1 - b2 + 0.5 * row[0];
        }
        out
    }

    fn from_table(&self, coeffs: &[[f64; CHEB_NODES]; 2], t: f64, x: Point) -> Point {
        let g = self.case.time.value(t);
        let big_g = self.clenshaw(coeffs, g * g);
        let a = self.case.a(t, x);
        [a[0] - g * big_g[0], a[1] - g * big_g[1]]
    }

    /// Direct oracle evaluation of the peridynamic force of the exact
    /// solution, bypassing the tables.
    pub fn exact_force(&self, t: f64, x: Point) -> Point {
        let case = &self.case;
        let u = Analytic(|y: Point| case.u(t, y));
        self.oracle.pd_force_at_point(&u, x, self.model)
    }
}

impl BodyForce for MmsForcing {
    fn eval(&self, t: f64, x: Point) -> Point {
        let f = self.exact_force(t, x);
        let a = self.case.a(t, x);
        [a[0] - f[0], a[1] - f[1]]
    }

    fn nodal(&self, t: f64, mesh: &Mesh) -> Vec<f64> {
        if mesh.nodes() != self.node_points.as_slice() {
            return (0..mesh.n_nodes())
                .flat_map(|i| {
                    let b = self.eval(t, mesh.node(i));
                    b.into_iter().take(self.dim)
                })
                .collect();
        }
        let d = self.dim;
        let mut out = Vec::with_capacity(mesh.n_dofs());
        for (x, coeffs) in self.node_points.iter().zip(&self.node_table) {
            out.extend_from_slice(&self.from_table(coeffs, t, *x)[..d]);
        }
        out
    }

    fn load(&self, t: f64, mesh: &Mesh, parallel: bool) -> Vec<f64> {
        let table = match &self.gauss_table {
            Some(tab) if mesh.nodes() == self.node_points.as_slice() => tab,
            _ => return crate::assembly::load_vector(mesh, |x| self.eval(t, x), parallel),
        };
        let d = mesh.dim();
        let rule = force_rule(d);
        let mut out = vec![0.0; mesh.n_dofs()];
        for e in 0..mesh.n_elements() {
            let meas = mesh.element_measure(e);
            for (q, (bary, w)) in rule.iter().enumerate() {
                let x = mesh.point_in_element(e, bary);
                let b = self.from_table(&table[e * rule.len() + q], t, x);
                for (k, &n) in mesh.element(e).iter().enumerate() {
                    for c in 0..d {
                        out[n * d + c] += w * meas * bary[k] * b[c];
                    }
                }
            }
        }
        out
    }
}
