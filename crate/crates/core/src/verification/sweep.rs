use super::{error_ek, ErrorEk, fit_rate, ManufacturedCase, MmsForcing, RateReport};
use crate::assembly::{MassMode, ModelKind, Peridynamics};
use crate::dynamics::{Form, RunConfig, Solver};
use crate::error::{Error, Result};
use crate::geometry::{build_horizon_quadrature, build_uniform_mesh, default_lattice_refinement};
use crate::potential::PotentialSpec;

/// Fixed settings of a manufactured-solution convergence study.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub case: ManufacturedCase,
    pub spec: PotentialSpec,
    pub epsilon: f64,
    /// Mesh size used by time sweeps.
    pub h: f64,
    /// Time step used by space sweeps.
    pub dt: f64,
    pub t_final: f64,
    pub form: Form,
    pub model: ModelKind,
    pub mass_mode: MassMode,
    /// Horizon lattice refinement; chosen from `epsilon / h` when `None`.
    pub lattice: Option<usize>,
    /// Refinement factor of the oracle table defining the forcing.
    pub oracle_factor: usize,
    /// `sup_k E^k` is taken over every `stride`-th step and the final step.
    pub stride: usize,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn new(case: ManufacturedCase, spec: PotentialSpec, epsilon: f64) -> Self {
        SweepConfig {
            case,
            spec,
            epsilon,
            h: 1.0 / 64.0,
            dt: 1e-3,
            t_final: 0.1,
            form: Form::Strong,
            model: ModelKind::Nonlinear,
            mass_mode: MassMode::Consistent,
            lattice: None,
            oracle_factor: 4,
            stride: 1,
            parallel: true,
        }
    }
}

/// Which resolution a sweep varies.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepParameter {
    /// Mesh sizes, strictly decreasing.
    Space(Vec<f64>),
    /// Time steps, strictly decreasing.
    Time(Vec<f64>),
}

/// `sup_k E^k` of one manufactured-solution run at mesh size `h` and step `dt`.
pub fn sweep_point(cfg: &SweepConfig, h: f64, dt: f64) -> Result<f64> {
    sweep_point_with(cfg, h, dt, |_, _, _| {})
}

/// As [`sweep_point`], reporting `(step, time, error)` at every sampled step.
pub fn sweep_point_with<O>(cfg: &SweepConfig, h: f64, dt: f64, mut observer: O) -> Result<f64>
where
    O: FnMut(usize, f64, &ErrorEk),
{
    let d = cfg.case.dim();
    if cfg.spec.dim != d {
        return Err(Error::domain("potential and manufactured case dimensions differ"));
    }
    let domain = cfg.case.domain();
    let mesh = build_uniform_mesh(&domain, h)?;
    let m = cfg
        .lattice
        .unwrap_or_else(|| default_lattice_refinement(cfg.epsilon, mesh.spacing()));
    let table = build_horizon_quadrature(cfg.epsilon, m, cfg.spec.influence, d)?;
    let oracle_table = table.refined(cfg.oracle_factor.max(1))?;
    let pd = Peridynamics::new(cfg.spec, table, domain.clone())?.with_parallel(cfg.parallel);
    let oracle = pd.with_table(oracle_table)?;
    let forcing = MmsForcing::new(
        cfg.case.clone(),
        oracle,
        cfg.model,
        &mesh,
        cfg.t_final,
        cfg.form == Form::Weak,
    );
    let run = RunConfig::new(cfg.t_final, dt)
        .with_form(cfg.form)
        .with_model(cfg.model)
        .with_mass_mode(cfg.mass_mode)
        .with_energy(false);
    let solver = Solver::new(&pd, &mesh, run)?;
    let case = &cfg.case;
    let stride = cfg.stride.max(1);
    let last = solver.config().n_steps()?;
    let mut worst = 0.0f64;
    solver.run_with(
        |x| case.u(0.0, x),
        |x| case.v(0.0, x),
        &forcing,
        |state, _| {
            if state.k % stride != 0 && state.k != last {
                return;
            }
            let e = error_ek(&mesh, &state.u_curr, &state.v_curr, case, state.t);
            observer(state.k, state.t, &e);
            worst = worst.max(e.total);
        },
    )?;
    Ok(worst)
}

/// Runs the manufactured case at each resolution and fits the observed
/// rate of `sup_k E^k`.
pub fn converge_sweep(cfg: &SweepConfig, param: &SweepParameter) -> Result<RateReport> {
    let (values, is_space) = match param {
        SweepParameter::Space(v) => (v, true),
        SweepParameter::Time(v) => (v, false),
    };
    let mut points = Vec::with_capacity(values.len());
    for &r in values {
        let (h, dt) = if is_space { (r, cfg.dt) } else { (cfg.h, r) };
        let err = sweep_point(cfg, h, dt).map_err(|e| Error::Sweep {
            resolution: r,
            source: Box::new(e),
        })?;
        points.push((r, err));
    }
    fit_rate(&points)
}
