use super::{dot, norm, BoxDomain, Mesh, Point};
use crate::error::{Error, Result};

/// Anything that can report a displacement vector at a point.
pub trait DisplacementField: Sync {
    fn displacement(&self, x: Point) -> Point;
}

/// Piecewise-linear field given by nodal values laid out as `node * d + comp`.
#[derive(Clone, Copy, Debug)]
pub struct FeField<'a> {
    mesh: &'a Mesh,
    values: &'a [f64],
}

impl<'a> FeField<'a> {
    pub fn new(mesh: &'a Mesh, values: &'a [f64]) -> Self {
        assert_eq!(
            values.len(),
            mesh.n_dofs(),
            "nodal vector length does not match the mesh"
        );
        FeField { mesh, values }
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    #[inline]
    pub fn nodal(&self, node: usize) -> Point {
        let d = self.mesh.dim();
        let mut p = [0.0; 2];
        p[..d].copy_from_slice(&self.values[node * d..node * d + d]);
        p
    }
}

impl DisplacementField for FeField<'_> {
    #[inline]
    fn displacement(&self, x: Point) -> Point {
        interpolate(self, x)
    }
}

/// Closed-form displacement field.
pub struct Analytic<F>(pub F);

impl<F: Fn(Point) -> Point + Sync> DisplacementField for Analytic<F> {
    #[inline]
    fn displacement(&self, x: Point) -> Point {
        (self.0)(x)
    }
}

/// Evaluates the interpolant at `x`; zero outside the domain.
#[inline]
pub fn interpolate(field: &FeField<'_>, x: Point) -> Point {
    let mesh = field.mesh;
    match mesh.locate(x) {
        Some(loc) => {
            let mut u = [0.0; 2];
            for (k, &n) in mesh.element(loc.element).iter().enumerate() {
                let un = field.nodal(n);
                u[0] += loc.bary[k] * un[0];
                u[1] += loc.bary[k] * un[1];
            }
            u
        }
        None => [0.0; 2],
    }
}

/// Bond strain between `x` and `x + epsilon * xi`.
pub fn strain<F: DisplacementField + ?Sized>(
    field: &F,
    x: Point,
    xi: Point,
    epsilon: f64,
) -> Result<f64> {
    let len = norm(xi);
    if !(len > 0.0) {
        return Err(Error::domain("bond offset must be nonzero"));
    }
    let e = [xi[0] / len, xi[1] / len];
    let y = [x[0] + epsilon * xi[0], x[1] + epsilon * xi[1]];
    let uy = field.displacement(y);
    let ux = field.displacement(x);
    Ok(dot([uy[0] - ux[0], uy[1] - ux[1]], e) / (epsilon * len))
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Boundary taper: 1 at distance at least `epsilon` from the boundary,
/// decreasing smoothly to 0 on it, and 0 outside the domain.
#[inline]
pub fn taper_omega(x: Point, epsilon: f64, domain: &BoxDomain) -> f64 {
    let dist = domain.distance_to_boundary(x);
    if dist <= 0.0 {
        0.0
    } else {
        smoothstep((dist / epsilon).min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uniform_mesh;

    fn sample(mesh: &Mesh, f: impl Fn(Point) -> Point) -> Vec<f64> {
        let d = mesh.dim();
        let mut v = Vec::with_capacity(mesh.n_dofs());
        for p in mesh.nodes() {
            v.extend_from_slice(&f(*p)[..d]);
        }
        v
    }

    #[test]
    fn nodal_values_reproduced() {
        let mesh = build_uniform_mesh(&BoxDomain::unit(2), 0.25).unwrap();
        let vals = sample(&mesh, |x| [x[0].sin(), x[1] * x[0]]);
        let f = FeField::new(&mesh, &vals);
        for (i, p) in mesh.nodes().iter().enumerate() {
            assert_eq!(interpolate(&f, *p), f.nodal(i));
        }
    }

    #[test]
    fn linear_fields_exact() {
        let mesh = build_uniform_mesh(&BoxDomain::unit(2), 0.2).unwrap();
        let lin = |x: Point| [2.0 * x[0] - 0.5 * x[1] + 0.3, -x[0] + 4.0 * x[1] - 1.0];
        let vals = sample(&mesh, lin);
        let f = FeField::new(&mesh, &vals);
        for &x in &[[0.31, 0.72], [0.05, 0.93], [0.5, 0.5], [0.77, 0.11]] {
            let (a, b) = (interpolate(&f, x), lin(x));
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn outside_is_zero() {
        let mesh = build_uniform_mesh(&BoxDomain::unit(1), 0.1).unwrap();
        let vals = vec![1.0; mesh.n_dofs()];
        let f = FeField::new(&mesh, &vals);
        assert_eq!(interpolate(&f, [1.05, 0.0]), [0.0, 0.0]);
        assert_eq!(interpolate(&f, [-0.2, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let err = |h: f64| {
            let mesh = build_uniform_mesh(&BoxDomain::unit(1), h).unwrap();
            let vals = sample(&mesh, |x| [x[0] * x[0], 0.0]);
            let f = FeField::new(&mesh, &vals);
            (1..2000)
                .map(|k| {
                    let x = k as f64 / 2000.0;
                    (interpolate(&f, [x, 0.0])[0] - x * x).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn taper_values() {
        let dom = BoxDomain::unit(2);
        assert_eq!(taper_omega([0.5, 0.5], 0.1, &dom), 1.0);
        assert_eq!(taper_omega([0.0, 0.5], 0.1, &dom), 0.0);
        assert!((taper_omega([0.05, 0.5], 0.1, &dom) - 0.5).abs() < 1e-15);
        assert_eq!(taper_omega([1.2, 0.5], 0.1, &dom), 0.0);
    }

    #[test]
    fn strain_of_simple_fields() {
        let mesh = build_uniform_mesh(&BoxDomain::unit(2), 0.1).unwrap();
        let trans = sample(&mesh, |_| [0.3, -0.7]);
        let rot = sample(&mesh, |x| [-1e-3 * x[1], 1e-3 * x[0]]);
        let (ft, fr) = (FeField::new(&mesh, &trans), FeField::new(&mesh, &rot));
        for &xi in &[[0.3, 0.1], [-0.5, 0.5], [0.0, 0.9]] {
            assert!(strain(&ft, [0.5, 0.5], xi, 0.2).unwrap().abs() < 1e-15);
            assert!(strain(&fr, [0.5, 0.5], xi, 0.2).unwrap().abs() < 1e-15);
        }
        let mesh1 = build_uniform_mesh(&BoxDomain::unit(1), 0.1).unwrap();
        let lin = sample(&mesh1, |x| [0.02 * x[0], 0.0]);
        let f = FeField::new(&mesh1, &lin);
        for &xi in &[[0.25, 0.0], [-0.8, 0.0]] {
            assert!((strain(&f, [0.5, 0.0], xi, 0.3).unwrap() - 0.02).abs() < 1e-14);
        }
        assert!(strain(&f, [0.5, 0.0], [0.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn strain_symmetric_under_reversal() {
        let u = Analytic(|x: Point| [x[0].sin() * x[1], x[1].cos()]);
        let (x, xi, eps) = ([0.4, 0.3], [0.5, -0.2], 0.3);
        let y = [x[0] + eps * xi[0], x[1] + eps * xi[1]];
        let a = strain(&u, x, xi, eps).unwrap();
        let b = strain(&u, y, [-xi[0], -xi[1]], eps).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
