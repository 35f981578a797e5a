//! Manufactured solutions, error measures, convergence-rate fits and the
//! a-priori error estimate.

mod case;
mod forcing;
mod sweep;

pub use case::{ManufacturedCase, SpatialProfile, TimeFactor};
pub use forcing::MmsForcing;
pub use sweep::{converge_sweep, sweep_point, sweep_point_with, SweepConfig, SweepParameter};

use crate::assembly::{l2_project, ModelKind, Peridynamics, ProjectionMode};
use crate::error::{Error, Result};
use crate::geometry::quadrature::accurate_rule;
use crate::geometry::{Analytic, FeField, Mesh, Point};

/// `||u_h - f||_{L2}` by element quadrature.
pub fn l2_error<F: Fn(Point) -> Point>(mesh: &Mesh, values: &[f64], f: F) -> f64 {
    let d = mesh.dim();
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let meas = mesh.element_measure(e);
        for (bary, w) in accurate_rule(d) {
            let x = mesh.point_in_element(e, bary);
            let mut uh = [0.0; 2];
            for (k, &n) in mesh.element(e).iter().enumerate() {
                for c in 0..d {
                    uh[c] += bary[k] * values[n * d + c];
                }
            }
            let ex = f(x);
            for c in 0..d {
                acc += w * meas * (uh[c] - ex[c]).powi(2);
            }
        }
    }
    acc.sqrt()
}

/// `||f||_{L2}` over the mesh domain.
pub fn l2_norm<F: Fn(Point) -> Point>(mesh: &Mesh, f: F) -> f64 {
    l2_error(mesh, &vec![0.0; mesh.n_dofs()], f)
}

/// Displacement and velocity parts of `E^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEk {
    pub displacement: f64,
    pub velocity: f64,
    pub total: f64,
}

/// `E^k = ||u_h^k - u(t^k)|| + ||v_h^k - v(t^k)||`.
pub fn error_ek(mesh: &Mesh, u_h: &[f64], v_h: &[f64], case: &ManufacturedCase, t: f64) -> ErrorEk {
    let displacement = l2_error(mesh, u_h, |x| case.u(t, x));
    let velocity = l2_error(mesh, v_h, |x| case.v(t, x));
    ErrorEk {
        displacement,
        velocity,
        total: displacement + velocity,
    }
}

/// Time truncation errors at step `k`:
/// `tau_u = du/dt(t^{k+1}) - (u(t^{k+1}) - u(t^k)) / dt` and likewise for `v`.
pub fn tau_norms(case: &ManufacturedCase, mesh: &Mesh, dt: f64, k: usize) -> (f64, f64) {
    let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
    let tau_u = l2_norm(mesh, |x| {
        let (a, b, c) = (case.v(t1, x), case.u(t1, x), case.u(t0, x));
        [a[0] - (b[0] - c[0]) / dt, a[1] - (b[1] - c[1]) / dt]
    });
    let tau_v = l2_norm(mesh, |x| {
        let (a, b, c) = (case.a(t1, x), case.v(t1, x), case.v(t0, x));
        [a[0] - (b[0] - c[0]) / dt, a[1] - (b[1] - c[1]) / dt]
    });
    (tau_u, tau_v)
}

/// `||F(u(t)) - F(r_h u(t))||_{L2}` with `r_h` the projection onto fields
/// vanishing on the boundary and `F` the force of `pd`.
pub fn sigma_norm(case: &ManufacturedCase, mesh: &Mesh, pd: &Peridynamics, model: ModelKind, t: f64) -> Result<f64> {
    let projected = l2_project(|x| case.u(t, x), mesh, ProjectionMode::Homogeneous)?;
    let field = FeField::new(mesh, &projected);
    let exact = Analytic(|x: Point| case.u(t, x));
    let d = mesh.dim();
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let meas = mesh.element_measure(e);
        for (bary, w) in accurate_rule(d) {
            let x = mesh.point_in_element(e, bary);
            let a = pd.pd_force_at_point(&exact, x, model);
            let b = pd.pd_force_at_point(&field, x, model);
            acc += w * meas * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
        }
    }
    Ok(acc.sqrt())
}

/// The truncation terms of the error analysis at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub tau_u: f64,
    pub tau_v: f64,
    pub sigma: f64,
}

pub fn truncation_errors(
    case: &ManufacturedCase,
    mesh: &Mesh,
    pd: &Peridynamics,
    model: ModelKind,
    dt: f64,
    k: usize,
) -> Result<Truncation> {
    let (tau_u, tau_v) = tau_norms(case, mesh, dt, k);
    let sigma = sigma_norm(case, mesh, pd, model, k as f64 * dt)?;
    Ok(Truncation { tau_u, tau_v, sigma })
}

/// Least-squares fit of `log(error) = slope * log(resolution) + intercept`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// `(resolution, error)` pairs, resolutions strictly decreasing.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub r2: f64,
}

impl RateReport {
    /// At least three points fitted with `R^2 >= 0.99`; otherwise the data
    /// are flagged as pre-asymptotic.
    pub fn is_asymptotic(&self) -> bool {
        self.points.len() >= 3 && self.r2 >= 0.99
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateReport> {
    if points.len() < 2 {
        return Err(Error::domain("a rate fit needs at least two points"));
    }
    if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::domain("resolutions must be strictly decreasing"));
    }
    if points.iter().any(|&(r, e)| !(r > 0.0 && e > 0.0)) {
        return Err(Error::domain("resolutions and errors must be positive"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateReport {
        points: points.to_vec(),
        slope,
        intercept,
        r2,
    })
}

/// `L1` value used in the illustrative error estimate.
pub const ILLUSTRATIVE_L1: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriInputs {
    pub t_final: f64,
    pub epsilon: f64,
    pub h: f64,
    pub dt: f64,
    /// `sup_t ||d^2u/dt^2||`.
    pub c_t: f64,
    /// `sup_t ||u||_{H2}`.
    pub sup_u_h2: f64,
    pub l1: f64,
}

/// Breakdown of the a-priori bound
/// `exp(a) (C_t T dt + a h^2 sup||u||_2) / (1 - dt)^2`, `a = (1 + L1) T / eps^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriBound {
    pub exponent: f64,
    pub growth: f64,
    /// `exp(a) C_t T dt`.
    pub temporal: f64,
    /// `exp(a) a h^2 sup||u||_2`.
    pub spatial: f64,
    /// Sum of both terms divided by `(1 - dt)^2`.
    pub total: f64,
}

pub fn apriori_bound(inp: &AprioriInputs) -> Result<AprioriBound> {
    if !(inp.dt > 0.0 && inp.dt < 1.0) {
        return Err(Error::domain(format!("time step must lie in (0, 1), got {}", inp.dt)));
    }
    if !(inp.epsilon > 0.0) || inp.t_final < 0.0 || inp.h < 0.0 || inp.l1 < 0.0 {
        return Err(Error::domain("estimate inputs must be nonnegative with positive horizon"));
    }
    let exponent = (1.0 + inp.l1) * inp.t_final / (inp.epsilon * inp.epsilon);
    let growth = exponent.exp();
    let temporal = growth * inp.c_t * inp.t_final * inp.dt;
    let spatial = growth * exponent * inp.h * inp.h * inp.sup_u_h2;
    Ok(AprioriBound {
        exponent,
        growth,
        temporal,
        spatial,
        total: (temporal + spatial) / (1.0 - inp.dt).powi(2),
    })
}

/// Final time `T` for which `l_bar T / eps^2` equals `exponent`.
pub fn time_for_exponent(exponent: f64, epsilon: f64, l_bar: f64) -> f64 {
    exponent * epsilon * epsilon / l_bar
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_uniform_mesh, BoxDomain};

    #[test]
    fn synthetic_rate() {
        let r = fit_rate(&[(0.1, 4e-3), (0.05, 1e-3)]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!(!r.is_asymptotic());
        assert!(fit_rate(&[(0.05, 1e-3), (0.1, 4e-3)]).is_err());
    }

    #[test]
    fn estimate_arithmetic() {
        let t = time_for_exponent(8.0, 0.1, 1.0 + ILLUSTRATIVE_L1);
        assert!((t - 0.016).abs() < 1e-15);
        let b = apriori_bound(&AprioriInputs {
            t_final: t,
            epsilon: 0.1,
            h: 0.00142,
            dt: 1e-3,
            c_t: 1.0,
            sup_u_h2: 1.0,
            l1: ILLUSTRATIVE_L1,
        })
        .unwrap();
        assert!((b.exponent - 8.0).abs() < 1e-12);
        assert!((b.growth * b.exponent - 23847.66).abs() < 0.01);
        assert!((b.spatial - 0.0481).abs() < 1e-4);
        assert!(apriori_bound(&AprioriInputs { dt: 1.0, ..AprioriInputs {
            t_final: t,
            epsilon: 0.1,
            h: 0.0,
            dt: 0.5,
            c_t: 0.0,
            sup_u_h2: 0.0,
            l1: 4.0,
        } })
        .is_err());
    }

    #[test]
    fn tau_of_linear_and_quadratic_time_factors() {
        let mesh = build_uniform_mesh(&BoxDomain::unit(1), 1.0 / 32.0).unwrap();
        let lin = ManufacturedCase {
            time: TimeFactor::Polynomial(vec![0.5, 2.0]),
            profile: SpatialProfile::Sine1d,
        };
        let (tu, _) = tau_norms(&lin, &mesh, 0.01, 3);
        assert!(tu < 1e-12);
        let quad = ManufacturedCase {
            time: TimeFactor::Polynomial(vec![0.0, 0.0, 1.0]),
            profile: SpatialProfile::Sine1d,
        };
        let dt = 0.01;
        let (tu, tv) = tau_norms(&quad, &mesh, dt, 5);
        let profile = l2_norm(&mesh, |x| SpatialProfile::Sine1d.eval(x));
        assert!((tu - dt * profile).abs() < 1e-12);
        assert!(tv < 1e-10);
    }

    #[test]
    fn error_of_exact_samples_is_interpolation_floor() {
        let case = ManufacturedCase::sine_1d(1.0, 1.0);
        let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&h| {
                let mesh = build_uniform_mesh(&BoxDomain::unit(1), h).unwrap();
                let u: Vec<f64> = mesh.nodes().iter().map(|&x| case.u(0.0, x)[0]).collect();
                let v = vec![0.0; mesh.n_dofs()];
                error_ek(&mesh, &u, &v, &case, 0.0).total
            })
            .collect();
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.05);
    }
}
