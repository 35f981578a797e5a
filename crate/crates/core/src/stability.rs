//! Stability of the linearized scheme: the largest generalized eigenvalue
//! of `(A_l, M)`, the resulting time-step limit, and the conserved discrete
//! energy.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{MassMatrix, MassMode, ModelKind, Peridynamics};
use crate::dynamics::{BodyForce, Solver, ZeroForce};
use crate::error::{Error, Result};
use crate::geometry::{FeField, Mesh, Point};
use crate::sparse::dot;

/// Safety inflation applied to the estimated supremum.
pub const SAFETY_FACTOR: f64 = 1.0 + 1e-6;

#[derive(Clone, Debug)]
pub struct RayleighOptions {
    /// Stop once the Ritz residual falls below `tol` times the Ritz value.
    pub tol: f64,
    /// Maximum number of operator applications per trial.
    pub max_iter: usize,
    /// Independent random starts; the largest estimate wins.
    pub trials: usize,
    /// Krylov basis size before an explicit restart.
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        RayleighOptions {
            tol: 1e-10,
            max_iter: 10_000,
            trials: 3,
            max_basis: 200,
            seed: 0x5eed,
        }
    }
}

/// Estimate of `sup a_l(u, u) / (u, u)` over the discrete space.
#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    /// Supremum after the safety inflation.
    pub mu_max: f64,
    /// `2 / sqrt(mu_max)`.
    pub dt_max: f64,
    pub iterations: usize,
    /// Final relative Ritz residual.
    pub residual: f64,
    pub mass_mode: MassMode,
    /// Approximate maximizer, normalized in the mass inner product.
    pub vector: Vec<f64>,
}

struct LanczosResult {
    theta: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
}

/// Largest eigenvalue of `M^{-1} A` for symmetric `A` and SPD `M` by Lanczos
/// in the `M` inner product with full reorthogonalization and explicit
/// restarts from the current Ritz vector.
fn lanczos_top<A, S, W>(
    start: Vec<f64>,
    apply_a: &A,
    solve_m: &S,
    apply_m: &W,
    opts: &RayleighOptions,
) -> Result<LanczosResult>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    S: Fn(&[f64]) -> Result<Vec<f64>>,
    W: Fn(&[f64]) -> Vec<f64>,
{
    let n = start.len();
    let m_norm = |x: &[f64]| dot(x, &apply_m(x)).max(0.0).sqrt();
    let mut q0 = start;
    let nrm = m_norm(&q0);
    if !(nrm > 0.0) {
        return Err(Error::Estimate {
            iterations: 0,
            last_quotient: 0.0,
        });
    }
    q0.iter_mut().for_each(|v| *v /= nrm);

    let mut iterations = 0;
    loop {
        let mut basis: Vec<Vec<f64>> = vec![q0.clone()];
        let mut m_basis: Vec<Vec<f64>> = vec![apply_m(&q0)];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let cap = opts.max_basis.max(2).min(n.max(1));
        loop {
            let j = basis.len() - 1;
            let aq = apply_a(&basis[j])?;
            iterations += 1;
            let alpha = dot(&basis[j], &aq);
            let mut w = solve_m(&aq)?;
            for _ in 0..2 {
                for (q, mq) in basis.iter().zip(&m_basis) {
                    let c = dot(&w, mq);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            alphas.push(alpha);
            let beta = m_norm(&w);

            let k = alphas.len();
            let mut t = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (top, theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let s = eig.eigenvectors.column(top);
            let residual = beta * s[k - 1].abs() / theta.abs().max(f64::MIN_POSITIVE);

            let breakdown = beta <= 1e-14 * theta.abs().max(alpha.abs());
            let converged = residual < opts.tol || breakdown;
            let full = basis.len() >= cap || breakdown;
            if converged || full || iterations >= opts.max_iter {
                let mut x = vec![0.0; n];
                for (i, q) in basis.iter().enumerate() {
                    x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += s[i] * qi);
                }
                let nx = m_norm(&x);
                x.iter_mut().for_each(|v| *v /= nx);
                if converged {
                    return Ok(LanczosResult {
                        theta,
                        vector: x,
                        iterations,
                        residual,
                    });
                }
                if iterations >= opts.max_iter {
                    return Err(Error::Estimate {
                        iterations,
                        last_quotient: theta,
                    });
                }
                q0 = x;
                break;
            }
            betas.push(beta);
            w.iter_mut().for_each(|v| *v /= beta);
            m_basis.push(apply_m(&w));
            basis.push(w);
        }
    }
}

/// Supremum of the generalized Rayleigh quotient `a_l(u, u) / (u, u)` over
/// nodal vectors vanishing on the boundary, in the inner product of
/// `mass_mode`. This is the time-step limit of the weak form; the strong form
/// uses [`strong_radius`].
pub fn rayleigh_sup(
    pd: &Peridynamics,
    mesh: &Mesh,
    mass: &MassMatrix,
    mass_mode: MassMode,
    opts: &RayleighOptions,
) -> Result<SpectralEstimate> {
    let constrained = mesh.constrained_dofs();
    let n = mesh.n_dofs();
    if constrained.iter().all(|&c| c) {
        return Err(Error::domain("mesh has no interior degrees of freedom"));
    }
    let mask = |v: &mut [f64]| {
        for (x, &c) in v.iter_mut().zip(&constrained) {
            if c {
                *x = 0.0;
            }
        }
    };
    let apply_a = |x: &[f64]| -> Result<Vec<f64>> {
        let mut f = pd.weak_force(&FeField::new(mesh, x), ModelKind::Linear);
        f.iter_mut().for_each(|v| *v = -*v);
        mask(&mut f);
        Ok(f)
    };
    let strict = mass.clone().with_tolerance(mass.tolerance().min(1e-14));
    let solve_m = |r: &[f64]| -> Result<Vec<f64>> {
        let mut x = vec![0.0; n];
        match strict.solve_dirichlet(r, &mut x, mass_mode) {
            Ok(_) => Ok(x),
            // round-off can stall CG just above a very tight tolerance
            Err(Error::Solver { residual, .. }) if residual < 1e-11 => Ok(x),
            Err(e) => Err(e),
        }
    };
    let apply_m = |x: &[f64]| {
        let mut y = mass.mul(x, mass_mode);
        mask(&mut y);
        y
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<LanczosResult> = None;
    let mut total_iterations = 0;
    for _ in 0..opts.trials.max(1) {
        let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        mask(&mut start);
        let r = lanczos_top(start, &apply_a, &solve_m, &apply_m, opts)?;
        total_iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.theta > b.theta) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one trial");
    // exact quotient of the returned vector
    let ax = apply_a(&best.vector)?;
    let quotient = dot(&best.vector, &ax) / dot(&best.vector, &apply_m(&best.vector));
    let mu = quotient.max(best.theta) * SAFETY_FACTOR;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Estimate {
            iterations: total_iterations,
            last_quotient: quotient,
        });
    }
    Ok(SpectralEstimate {
        mu_max: mu,
        dt_max: 2.0 / mu.sqrt(),
        iterations: total_iterations,
        residual: best.residual,
        mass_mode,
        vector: best.vector,
    })
}

/// Largest eigenvalue of `K x = mu M x` for dense symmetric `K` and SPD `M`,
/// through the Cholesky factor of `M`.
pub fn dense_generalized_max(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::domain("mass matrix is not positive definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::domain("singular Cholesky factor"))?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(SymmetricEigen::new(c).eigenvalues.max())
}

/// Dense reference for [`rayleigh_sup`] on small meshes (no safety factor).
pub fn dense_rayleigh_sup(pd: &Peridynamics, mesh: &Mesh, mass: &MassMatrix, mass_mode: MassMode) -> Result<f64> {
    let free: Vec<usize> = mesh
        .constrained_dofs()
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    let a = pd.stiffness_dense_linear(mesh);
    let nf = free.len();
    let k = DMatrix::from_fn(nf, nf, |i, j| a[(free[i], free[j])]);
    let m = match mass_mode {
        MassMode::Consistent => DMatrix::from_fn(nf, nf, |i, j| mass.matrix().get(free[i], free[j])),
        MassMode::Lumped => DMatrix::from_diagonal(&DVector::from_iterator(
            nf,
            free.iter().map(|&i| mass.lumped()[i]),
        )),
    };
    dense_generalized_max(&k, &m)
}

/// Negated linear strong-form operator on free DOFs: `x -> -L x`.
fn strong_operator<'a>(pd: &'a Peridynamics, mesh: &'a Mesh) -> impl Fn(&[f64]) -> Vec<f64> + 'a {
    let constrained = mesh.constrained_dofs();
    move |x: &[f64]| {
        let mut f = pd.nodal_force_strong(&FeField::new(mesh, x), mesh, ModelKind::Linear);
        for (v, &c) in f.iter_mut().zip(&constrained) {
            *v = if c { 0.0 } else { -*v };
        }
        f
    }
}

/// Eigenvector of the Hessenberg matrix `h` for the eigenvalue nearest `theta`.
fn hessenberg_eigenvector(h: &DMatrix<f64>, theta: Complex<f64>) -> Option<DVector<Complex<f64>>> {
    let k = h.nrows();
    let shift = theta + Complex::new(1e-10 * theta.norm().max(1e-300), 0.0);
    let shifted = DMatrix::from_fn(k, k, |i, j| {
        let v = Complex::new(h[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = shifted.lu();
    let mut y = DVector::from_element(k, Complex::new(1.0, 0.0));
    for _ in 0..2 {
        y = lu.solve(&y)?;
        let n = y.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        y /= Complex::new(n, 0.0);
    }
    Some(y)
}

/// Spectral radius of the linear strong-form operator by restarted Arnoldi.
///
/// The collocation operator is not symmetric, so its spectrum is not bounded
/// by the Rayleigh quotient of the weak stiffness. The central-difference
/// scheme in strong form is stable for `dt^2 rho <= 4`. The returned vector is
/// normalized in the lumped mass norm and `mass_mode` is `Lumped`.
pub fn strong_radius(
    pd: &Peridynamics,
    mesh: &Mesh,
    mass: &MassMatrix,
    opts: &RayleighOptions,
) -> Result<SpectralEstimate> {
    let constrained = mesh.constrained_dofs();
    let n = mesh.n_dofs();
    if constrained.iter().all(|&c| c) {
        return Err(Error::domain("mesh has no interior degrees of freedom"));
    }
    let apply = strong_operator(pd, mesh);
    let norm = |x: &[f64]| dot(x, x).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for _ in 0..opts.trials.max(1) {
        let mut q: Vec<f64> = (0..n).map(|i| if constrained[i] { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        let cap = opts.max_basis.max(2).min(n);
        let found = 'restarts: loop {
            let nq = norm(&q);
            q.iter_mut().for_each(|v| *v /= nq);
            let mut basis = vec![q.clone()];
            let mut h = DMatrix::<f64>::zeros(cap + 1, cap);
            loop {
                let j = basis.len() - 1;
                let mut w = apply(&basis[j]);
                iterations += 1;
                for _ in 0..2 {
                    for (i, v) in basis.iter().enumerate() {
                        let c = dot(&w, v);
                        h[(i, j)] += c;
                        w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                    }
                }
                let beta = norm(&w);
                let k = j + 1;
                let hk = h.view((0, 0), (k, k)).into_owned();
                let theta = hk
                    .complex_eigenvalues()
                    .iter()
                    .copied()
                    .fold(Complex::new(0.0, 0.0), |a, z| if z.norm() > a.norm() { z } else { a });
                let radius = theta.norm();
                let y = hessenberg_eigenvector(&hk, theta);
                let residual = match &y {
                    Some(y) => beta * y[k - 1].norm() / radius.max(f64::MIN_POSITIVE),
                    None => 0.0,
                };
                let breakdown = beta <= 1e-14 * radius;
                let converged = residual < opts.tol || breakdown;
                if converged || k >= cap || iterations >= opts.max_iter {
                    let mut x = vec![0.0; n];
                    if let Some(y) = &y {
                        let use_im = y.iter().map(|c| c.re.abs()).sum::<f64>() < y.iter().map(|c| c.im.abs()).sum::<f64>();
                        for (i, v) in basis.iter().enumerate() {
                            let c = if use_im { y[i].im } else { y[i].re };
                            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
                        }
                    } else {
                        x.clone_from(&basis[j]);
                    }
                    if converged {
                        break 'restarts (radius, x, residual);
                    }
                    if iterations >= opts.max_iter {
                        return Err(Error::Estimate {
                            iterations,
                            last_quotient: radius,
                        });
                    }
                    q = x;
                    continue 'restarts;
                }
                w.iter_mut().for_each(|v| *v /= beta);
                h[(k, j)] = beta;
                basis.push(w);
            }
        };
        if best.as_ref().is_none_or(|b| found.0 > b.0) {
            best = Some(found);
        }
    }
    let (radius, mut vector, residual) = best.expect("at least one trial");
    let mu = radius * SAFETY_FACTOR;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Estimate {
            iterations,
            last_quotient: radius,
        });
    }
    let nm = mass.inner(&vector, &vector, MassMode::Lumped).sqrt();
    if nm > 0.0 {
        vector.iter_mut().for_each(|v| *v /= nm);
    }
    Ok(SpectralEstimate {
        mu_max: mu,
        dt_max: 2.0 / mu.sqrt(),
        iterations,
        residual,
        mass_mode: MassMode::Lumped,
        vector,
    })
}

/// Dense reference for [`strong_radius`] (no safety factor).
pub fn dense_strong_radius(pd: &Peridynamics, mesh: &Mesh) -> Result<f64> {
    let free: Vec<usize> = mesh
        .constrained_dofs()
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    let apply = strong_operator(pd, mesh);
    let nf = free.len();
    let mut a = DMatrix::<f64>::zeros(nf, nf);
    let mut e = vec![0.0; mesh.n_dofs()];
    for (j, &fj) in free.iter().enumerate() {
        e[fj] = 1.0;
        let col = apply(&e);
        e[fj] = 0.0;
        for (i, &fi) in free.iter().enumerate() {
            a[(i, j)] = col[fi];
        }
    }
    Ok(a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// The three parts of the discrete energy
/// `E = [ |d|^2 - dt^2/4 a_l(d, d) + a_l(ubar, ubar) ] / 2`
/// with `d = (u^{k+1} - u^k) / dt` and `ubar = (u^{k+1} + u^k) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteEnergy {
    pub value: f64,
    pub kinetic_term: f64,
    pub correction_term: f64,
    pub stiffness_term: f64,
}

/// `a_l(x, x)` through the linear weak force.
fn quadratic_form(pd: &Peridynamics, mesh: &Mesh, x: &[f64]) -> f64 {
    let f = pd.weak_force(&FeField::new(mesh, x), ModelKind::Linear);
    -dot(&f, x)
}

pub fn discrete_energy(
    pd: &Peridynamics,
    mesh: &Mesh,
    mass: &MassMatrix,
    mass_mode: MassMode,
    u_k: &[f64],
    u_k1: &[f64],
    dt: f64,
) -> DiscreteEnergy {
    let delta: Vec<f64> = u_k1.iter().zip(u_k).map(|(a, b)| (a - b) / dt).collect();
    let mean: Vec<f64> = u_k1.iter().zip(u_k).map(|(a, b)| 0.5 * (a + b)).collect();
    let kinetic_term = 0.5 * mass.inner(&delta, &delta, mass_mode);
    let correction_term = -0.125 * dt * dt * quadratic_form(pd, mesh, &delta);
    let stiffness_term = 0.5 * quadratic_form(pd, mesh, &mean);
    DiscreteEnergy {
        value: kinetic_term + correction_term + stiffness_term,
        kinetic_term,
        correction_term,
        stiffness_term,
    }
}

#[derive(Clone, Debug)]
pub struct ConservationReport {
    /// `max_k |E^k - E^0| / E^0`, or 0 when `E^0 = 0`.
    pub max_drift: f64,
    pub energies: Vec<f64>,
}

/// Runs the solver (linear model, no body force) and tracks the discrete
/// energy at every step. The solver's mass mode defines the inner product.
pub fn conservation_check<U, V>(solver: &Solver<'_>, u0: U, v0: V) -> Result<ConservationReport>
where
    U: Fn(Point) -> Point,
    V: Fn(Point) -> Point,
{
    if solver.config().model != ModelKind::Linear {
        return Err(Error::domain("conservation check requires the linear model"));
    }
    let u0 = solver.discretize(u0)?;
    let v0 = solver.discretize(v0)?;
    conservation_check_discrete(solver, u0, &v0)
}

/// As [`conservation_check`] from nodal initial vectors.
pub fn conservation_check_discrete(solver: &Solver<'_>, u0: Vec<f64>, v0: &[f64]) -> Result<ConservationReport> {
    let (pd, mesh, mass) = (solver.model(), solver.mesh(), solver.mass());
    let mode = solver.config().mass_mode;
    let mut energies = Vec::new();
    let zero: &dyn BodyForce = &ZeroForce;
    solver.run_discrete(u0, v0, zero, &mut |s, _| {
        energies.push(discrete_energy(pd, mesh, mass, mode, &s.u_curr, &s.u_next, s.dt).value);
    })?;
    let e0 = energies.first().copied().unwrap_or(0.0);
    let max_drift = if e0 == 0.0 {
        0.0
    } else {
        energies.iter().map(|e| (e - e0).abs() / e0.abs()).fold(0.0, f64::max)
    };
    Ok(ConservationReport { max_drift, energies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_mass;
    use crate::geometry::{build_horizon_quadrature, build_uniform_mesh, BoxDomain};
    use crate::potential::{InfluenceKind, PotentialSpec};

    #[test]
    fn single_degree_of_freedom() {
        let opts = RayleighOptions::default();
        let a = |x: &[f64]| Ok(vec![400.0 * x[0]]);
        let s = |x: &[f64]| Ok(x.to_vec());
        let m = |x: &[f64]| x.to_vec();
        let r = lanczos_top(vec![0.3], &a, &s, &m, &opts).unwrap();
        assert!((r.theta - 400.0).abs() < 1e-12);
        assert!((2.0 / r.theta.sqrt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn diagonal_spectrum_with_restarts() {
        let n = 300;
        let diag: Vec<f64> = (1..=n).map(|i| (i as f64).sqrt()).collect();
        let a = |x: &[f64]| Ok(x.iter().zip(&diag).map(|(a, b)| a * b).collect::<Vec<_>>());
        let s = |x: &[f64]| Ok(x.to_vec());
        let m = |x: &[f64]| x.to_vec();
        let opts = RayleighOptions {
            max_basis: 20,
            ..Default::default()
        };
        let start = vec![1.0; n];
        let r = lanczos_top(start, &a, &s, &m, &opts).unwrap();
        assert!((r.theta - (n as f64).sqrt()).abs() < 1e-8 * (n as f64).sqrt());
    }

    #[test]
    fn matches_dense_reference() {
        let spec = PotentialSpec::new(1.0, 1.0, InfluenceKind::LinearDecay, 1).unwrap();
        let table = build_horizon_quadrature(0.1, 4, spec.influence, 1).unwrap();
        let pd = Peridynamics::new(spec, table, BoxDomain::unit(1)).unwrap();
        let mesh = build_uniform_mesh(&BoxDomain::unit(1), 1.0 / 41.0).unwrap();
        let mass = assemble_mass(&mesh);
        for mode in [MassMode::Consistent, MassMode::Lumped] {
            let est = rayleigh_sup(&pd, &mesh, &mass, mode, &RayleighOptions::default()).unwrap();
            let dense = dense_rayleigh_sup(&pd, &mesh, &mass, mode).unwrap();
            assert!((est.mu_max / SAFETY_FACTOR - dense).abs() < 1e-8 * dense);
            assert!(est.mu_max >= dense);
        }
    }

    #[test]
    fn static_state_energy() {
        let spec = PotentialSpec::new(1.0, 1.0, InfluenceKind::LinearDecay, 1).unwrap();
        let table = build_horizon_quadrature(0.2, 4, spec.influence, 1).unwrap();
        let pd = Peridynamics::new(spec, table, BoxDomain::unit(1)).unwrap();
        let mesh = build_uniform_mesh(&BoxDomain::unit(1), 0.05).unwrap();
        let mass = assemble_mass(&mesh);
        let u: Vec<f64> = mesh.nodes().iter().map(|x| x[0] * (1.0 - x[0])).collect();
        let e = discrete_energy(&pd, &mesh, &mass, MassMode::Consistent, &u, &u, 0.01);
        let a = pd.bilinear_a_linear(&FeField::new(&mesh, &u), &FeField::new(&mesh, &u));
        assert!((e.value - 0.5 * a).abs() < 1e-12 * a);
        let z = vec![0.0; mesh.n_dofs()];
        assert_eq!(discrete_energy(&pd, &mesh, &mass, MassMode::Consistent, &z, &z, 0.01).value, 0.0);
    }
}
