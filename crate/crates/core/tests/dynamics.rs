use pdfem::assembly::{assemble_mass, MassMode, ModelKind, Peridynamics};
use pdfem::dynamics::{energy_stability_check, ConstantForce, FnForce, Form, RunConfig, Solver, ZeroForce};
use pdfem::geometry::{build_horizon_quadrature, build_uniform_mesh, default_lattice_refinement, BoxDomain, Mesh};
use pdfem::potential::{InfluenceKind, PotentialSpec};
use pdfem::stability::{
    conservation_check, dense_strong_radius, discrete_energy, rayleigh_sup, strong_radius, RayleighOptions, SAFETY_FACTOR,
};
use pdfem::Error;

fn setup(c: f64, h: f64, eps: f64) -> (Mesh, Peridynamics) {
    let mesh = build_uniform_mesh(&BoxDomain::unit(1), h).unwrap();
    let spec = PotentialSpec::new(c, 1.0, InfluenceKind::LinearDecay, 1).unwrap();
    let table = build_horizon_quadrature(eps, default_lattice_refinement(eps, h), spec.influence, 1).unwrap();
    let pd = Peridynamics::new(spec, table, BoxDomain::unit(1)).unwrap();
    (mesh, pd)
}

fn dt_max(pd: &Peridynamics, mesh: &Mesh) -> (f64, Vec<f64>) {
    let est = rayleigh_sup(pd, mesh, &assemble_mass(mesh), MassMode::Consistent, &RayleighOptions::default()).unwrap();
    (est.dt_max, est.vector)
}

#[test]
fn single_free_node_follows_the_discrete_harmonic_oscillator() {
    // Three nodes, one free: the scheme reduces to a scalar recurrence.
    let (mesh, pd) = setup(1.0, 0.5, 0.4);
    assert_eq!(mesh.n_dofs() - mesh.boundary_nodes().len(), 1);
    let (dtm, _) = dt_max(&pd, &mesh);
    let mu = 4.0 / (dtm * dtm) / (1.0 + 1e-6);
    let dt = 0.5 * dtm;
    let cfg = RunConfig::new(200.0 * dt, dt).with_form(Form::Weak).with_model(ModelKind::Linear);
    let solver = Solver::new(&pd, &mesh, cfg).unwrap();
    let out = solver.run(|_| [1.0, 0.0], |_| [0.0, 0.0], &ZeroForce).unwrap();
    assert_eq!(out.energy.rows.len(), out.steps + 1);
    let theta = (1.0 - 0.5 * mu * dt * dt).acos();
    // U^1 = U^0 (1 - dt^2 mu / 2) gives U^k = U^0 cos(k theta).
    let free = solver.discretize(|_| [1.0, 0.0]).unwrap()[1];
    let expected = free * (out.steps as f64 * theta).cos();
    assert!((out.final_state.u_curr[1] - expected).abs() < 1e-9 * free.abs().max(1.0));
}

#[test]
fn boundary_stays_clamped_and_rows_match_steps() {
    let (mesh, pd) = setup(1.0, 1.0 / 40.0, 0.1);
    let cfg = RunConfig::new(0.5, 0.01).with_model(ModelKind::Nonlinear);
    let solver = Solver::new(&pd, &mesh, cfg).unwrap();
    let out = solver
        .run(|x| [0.01 * (std::f64::consts::PI * x[0]).sin(), 0.0], |_| [0.0; 2], &ConstantForce([0.3, 0.0]))
        .unwrap();
    assert_eq!(out.steps, 50);
    assert_eq!(out.energy.rows.len(), 51);
    for i in mesh.boundary_nodes() {
        assert_eq!(out.final_state.u_curr[i], 0.0);
    }
}

#[test]
fn strong_and_weak_forms_approach_each_other_under_refinement() {
    let mut gaps = Vec::new();
    for h in [1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0] {
        let (mesh, pd) = setup(1.0, h, 0.1);
        let mut finals = Vec::new();
        for form in [Form::Strong, Form::Weak] {
            let cfg = RunConfig::new(0.4, 0.005).with_form(form).with_model(ModelKind::Linear);
            let solver = Solver::new(&pd, &mesh, cfg).unwrap();
            let bump = FnForce(|_t: f64, x: [f64; 2]| [(std::f64::consts::PI * x[0]).sin().powi(4), 0.0]);
            let out = solver.run(|_| [0.0; 2], |_| [0.0; 2], &bump).unwrap();
            finals.push(out.final_state.u_curr);
        }
        let scale = finals[1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = finals[0].iter().zip(&finals[1]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        gaps.push(diff / scale);
    }
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}

#[test]
fn quadrupling_stiffness_halves_the_time_step() {
    let (mesh, pd1) = setup(1.0, 1.0 / 30.0, 0.1);
    let (_, pd4) = setup(4.0, 1.0 / 30.0, 0.1);
    let (a, _) = dt_max(&pd1, &mesh);
    let (b, _) = dt_max(&pd4, &mesh);
    assert!((b / a - 0.5).abs() < 1e-8);
}

#[test]
fn discrete_energy_is_positive_below_and_negative_above_the_limit() {
    let (mesh, pd) = setup(1.0, 1.0 / 30.0, 0.1);
    let mass = assemble_mass(&mesh);
    let (dtm, top) = dt_max(&pd, &mesh);
    let n = mesh.n_dofs();
    let mut seed = 7u64;
    let mut next = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let clamp = |v: &mut Vec<f64>| {
        for i in mesh.boundary_nodes() {
            v[i] = 0.0;
        }
    };
    for _ in 0..20 {
        let mut a: Vec<f64> = (0..n).map(|_| next()).collect();
        let mut b: Vec<f64> = (0..n).map(|_| next()).collect();
        clamp(&mut a);
        clamp(&mut b);
        let e = discrete_energy(&pd, &mesh, &mass, MassMode::Consistent, &a, &b, 0.95 * dtm);
        assert!(e.value > 0.0);
    }
    let minus: Vec<f64> = top.iter().map(|v| -v).collect();
    let e = discrete_energy(&pd, &mesh, &mass, MassMode::Consistent, &top, &minus, 2.5 * dtm);
    assert!(e.value < 0.0);
}

#[test]
fn zero_data_has_zero_drift_and_drift_grows_slowly() {
    let (mesh, pd) = setup(1.0, 1.0 / 30.0, 0.1);
    let (dtm, _) = dt_max(&pd, &mesh);
    let dt = 0.5 * dtm;
    let lin = |t: f64| RunConfig::new(t, dt).with_form(Form::Weak).with_model(ModelKind::Linear);
    let solver = Solver::new(&pd, &mesh, lin(100.0 * dt)).unwrap();
    let zero = conservation_check(&solver, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
    assert_eq!(zero.max_drift, 0.0);

    let u0 = |x: [f64; 2]| [0.01 * (3.0 * std::f64::consts::PI * x[0]).sin(), 0.0];
    let v0 = |x: [f64; 2]| [0.02 * x[0] * (1.0 - x[0]), 0.0];
    let short = conservation_check(&solver, u0, v0).unwrap().max_drift;
    let solver = Solver::new(&pd, &mesh, lin(200.0 * dt)).unwrap();
    let long = conservation_check(&solver, u0, v0).unwrap().max_drift;
    assert!(long <= 2.0 * short + 1e-14, "{short} {long}");
}

#[test]
fn energy_bound_holds_for_forced_nonlinear_run() {
    let (mesh, pd) = setup(1.0, 1.0 / 40.0, 0.1);
    let (dtm, _) = dt_max(&pd, &mesh);
    let cfg = RunConfig::new(200.0 * 0.1 * dtm, 0.1 * dtm).with_model(ModelKind::Nonlinear).with_form(Form::Weak);
    let solver = Solver::new(&pd, &mesh, cfg).unwrap();
    let out = solver
        .run(|x| [0.01 * (std::f64::consts::PI * x[0]).sin(), 0.0], |_| [0.0; 2], &ConstantForce([0.5, 0.0]))
        .unwrap();
    assert!(energy_stability_check(&out.energy, 1e-3, 0.0).passed);
}

#[test]
fn unstable_step_is_reported() {
    let (mesh, pd) = setup(1.0, 1.0 / 30.0, 0.1);
    let (dtm, top) = dt_max(&pd, &mesh);
    let dt = 1.2 * dtm;
    let cfg = RunConfig::new(3000.0 * dt, dt).with_form(Form::Weak).with_model(ModelKind::Linear);
    let solver = Solver::new(&pd, &mesh, cfg).unwrap();
    let v0 = vec![0.0; mesh.n_dofs()];
    match solver.run_discrete(top, &v0, &ZeroForce, &mut |_, _| {}) {
        Err(Error::Instability { step, max_abs, .. }) => {
            assert!(step > 0 && step < 3000);
            assert!(max_abs.is_finite() || max_abs.is_infinite());
        }
        other => panic!("expected instability, got {:?}", other.map(|o| o.steps)),
    }
}

#[test]
fn strong_form_limit_is_sharp() {
    let (mesh, pd) = setup(1.0, 1.0 / 51.0, 0.1);
    let est = strong_radius(&pd, &mesh, &assemble_mass(&mesh), &RayleighOptions::default()).unwrap();
    let dense = dense_strong_radius(&pd, &mesh).unwrap();
    assert!((est.mu_max / SAFETY_FACTOR - dense).abs() < 1e-8 * dense);
    let run = |factor: f64, steps: f64| {
        let dt = factor * est.dt_max;
        let cfg = RunConfig::new(steps * dt, dt).with_model(ModelKind::Linear).with_energy(false);
        let solver = Solver::new(&pd, &mesh, cfg).unwrap();
        solver.run_discrete(est.vector.clone(), &vec![0.0; mesh.n_dofs()], &ZeroForce, &mut |_, _| {})
    };
    let stable = run(0.95, 3000.0).unwrap();
    let peak = stable.final_state.u_curr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let start = est.vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak <= 10.0 * start);
    assert!(matches!(run(1.1, 2000.0), Err(Error::Instability { .. })));
}
