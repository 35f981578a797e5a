//! Central-difference time integration in strong and weak form.

use std::fmt;
use std::str::FromStr;

use crate::assembly::{
    assemble_mass, l2_project_with, load_vector, MassMatrix, MassMode, ModelKind, Peridynamics,
    ProjectionMode,
};
use crate::error::{Error, Result};
use crate::geometry::{FeField, Mesh, Point};

/// Multiple of the initial displacement scale treated as a blow-up.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;
/// Absolute blow-up threshold used when the initial scale is zero.
const ABSOLUTE_BLOWUP: f64 = 1e150;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Form {
    /// Nodal collocation of the force; no mass solve.
    #[default]
    Strong,
    /// Galerkin form with a mass-matrix solve per step.
    Weak,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Strong => "strong",
            Form::Weak => "weak",
        })
    }
}

impl FromStr for Form {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strong" => Ok(Form::Strong),
            "weak" => Ok(Form::Weak),
            _ => Err(format!("unknown form `{s}` (expected strong or weak)")),
        }
    }
}

/// External force density `b(t, x)`.
pub trait BodyForce: Sync {
    fn eval(&self, t: f64, x: Point) -> Point;

    fn is_zero(&self) -> bool {
        false
    }

    /// Nodal samples laid out as `node * d + comp`.
    fn nodal(&self, t: f64, mesh: &Mesh) -> Vec<f64> {
        let d = mesh.dim();
        let mut out = Vec::with_capacity(mesh.n_dofs());
        for &x in mesh.nodes() {
            out.extend_from_slice(&self.eval(t, x)[..d]);
        }
        out
    }

    /// Load vector `int phi_i b(t, x) dx`.
    fn load(&self, t: f64, mesh: &Mesh, parallel: bool) -> Vec<f64> {
        load_vector(mesh, |x| self.eval(t, x), parallel)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroForce;

impl BodyForce for ZeroForce {
    fn eval(&self, _t: f64, _x: Point) -> Point {
        [0.0; 2]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantForce(pub Point);

impl BodyForce for ConstantForce {
    fn eval(&self, _t: f64, _x: Point) -> Point {
        self.0
    }

    fn is_zero(&self) -> bool {
        self.0 == [0.0; 2]
    }
}

/// Body force given by a closure of `(t, x)`.
pub struct FnForce<F>(pub F);

impl<F: Fn(f64, Point) -> Point + Sync> BodyForce for FnForce<F> {
    fn eval(&self, t: f64, x: Point) -> Point {
        (self.0)(t, x)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub t_final: f64,
    pub dt: f64,
    pub form: Form,
    pub model: ModelKind,
    /// Mass used by the weak form and for the kinetic energy of weak runs.
    pub mass_mode: MassMode,
    /// Snapshot stride in steps.
    pub stride: usize,
    /// Compute the energy row at every step.
    pub record_energy: bool,
    pub blowup_factor: f64,
}

impl RunConfig {
    pub fn new(t_final: f64, dt: f64) -> Self {
        RunConfig {
            t_final,
            dt,
            form: Form::Strong,
            model: ModelKind::Nonlinear,
            mass_mode: MassMode::Consistent,
            stride: 1,
            record_energy: true,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
        }
    }

    pub fn with_form(mut self, form: Form) -> Self {
        self.form = form;
        self
    }

    pub fn with_model(mut self, model: ModelKind) -> Self {
        self.model = model;
        self
    }

    pub fn with_mass_mode(mut self, mode: MassMode) -> Self {
        self.mass_mode = mode;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn with_energy(mut self, record: bool) -> Self {
        self.record_energy = record;
        self
    }

    /// Number of steps to reach `t_final`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(Error::domain(format!("time step must lie in (0, 1), got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::domain(format!("final time must be nonnegative, got {}", self.t_final)));
        }
        let n = self.t_final / self.dt;
        let k = n.round();
        if (n - k).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::domain(format!(
                "final time {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(k as usize)
    }
}

/// Three consecutive displacement vectors and the forward velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// `U^{k-1}` (equal to `U^0` at `k = 0`).
    pub u_prev: Vec<f64>,
    /// `U^k`.
    pub u_curr: Vec<f64>,
    /// `U^{k+1}`.
    pub u_next: Vec<f64>,
    /// `v^k = (U^{k+1} - U^k) / dt`.
    pub v_curr: Vec<f64>,
    pub k: usize,
    pub t: f64,
    pub dt: f64,
    accel: Vec<f64>,
}

impl SimState {
    fn refresh_velocity(&mut self) {
        for i in 0..self.v_curr.len() {
            self.v_curr[i] = (self.u_next[i] - self.u_curr[i]) / self.dt;
        }
    }

    /// Reverses the direction of time: subsequent unforced steps retrace
    /// `U^{k-1}, U^{k-2}, ...`. The step counter keeps increasing.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.u_prev, &mut self.u_next);
        self.refresh_velocity();
    }
}

/// Energies at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    /// `(sqrt(E^0) + sum_{j<=k} |b^j| dt)^2`.
    pub work_bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub dt: f64,
    pub rows: Vec<EnergyRow>,
}

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub steps: usize,
    pub final_state: SimState,
    pub energy: EnergyReport,
}

/// Time integrator bound to a model, a mesh and a run configuration.
pub struct Solver<'a> {
    pd: &'a Peridynamics,
    mesh: &'a Mesh,
    mass: MassMatrix,
    cfg: RunConfig,
    constrained: Vec<bool>,
}

impl<'a> Solver<'a> {
    pub fn new(pd: &'a Peridynamics, mesh: &'a Mesh, cfg: RunConfig) -> Result<Self> {
        Self::with_mass(pd, mesh, cfg, assemble_mass(mesh))
    }

    pub fn with_mass(pd: &'a Peridynamics, mesh: &'a Mesh, cfg: RunConfig, mass: MassMatrix) -> Result<Self> {
        if mesh.dim() != pd.dim() {
            return Err(Error::domain("mesh and model dimensions differ"));
        }
        cfg.n_steps()?;
        Ok(Solver {
            pd,
            mesh,
            constrained: mesh.constrained_dofs(),
            mass,
            cfg,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn model(&self) -> &Peridynamics {
        self.pd
    }

    fn zero_constrained(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }

    /// Discrete initial data: nodal interpolation (strong form) or L2
    /// projection onto fields vanishing on the boundary (weak form).
    pub fn discretize<F: Fn(Point) -> Point>(&self, f: F) -> Result<Vec<f64>> {
        let mut v = match self.cfg.form {
            Form::Strong => {
                let d = self.mesh.dim();
                let mut v = Vec::with_capacity(self.mesh.n_dofs());
                for &x in self.mesh.nodes() {
                    v.extend_from_slice(&f(x)[..d]);
                }
                v
            }
            Form::Weak => l2_project_with(f, self.mesh, &self.mass, ProjectionMode::Homogeneous)?,
        };
        self.zero_constrained(&mut v);
        Ok(v)
    }

    /// `M^{-1} F` (weak) or the nodal force density (strong) at time `t`,
    /// with constrained entries zero. `guess` seeds the mass solve.
    pub fn acceleration(&self, u: &[f64], t: f64, body: &dyn BodyForce, guess: &mut Vec<f64>) -> Result<()> {
        let field = FeField::new(self.mesh, u);
        let model = self.cfg.model;
        match self.cfg.form {
            Form::Strong => {
                let mut f = self.pd.nodal_force_strong(&field, self.mesh, model);
                if !body.is_zero() {
                    for (fi, bi) in f.iter_mut().zip(body.nodal(t, self.mesh)) {
                        *fi += bi;
                    }
                }
                self.zero_constrained(&mut f);
                *guess = f;
            }
            Form::Weak => {
                let mut f = self.pd.weak_force(&field, model);
                if !body.is_zero() {
                    for (fi, li) in f.iter_mut().zip(body.load(t, self.mesh, self.pd.is_parallel())) {
                        *fi += li;
                    }
                }
                if guess.len() != f.len() {
                    *guess = vec![0.0; f.len()];
                }
                self.mass.solve_dirichlet(&f, guess, self.cfg.mass_mode)?;
            }
        }
        Ok(())
    }

    /// State at `k = 0` holding `U^0` and `U^1 = U^0 + dt V^0 + dt^2/2 a^0`.
    pub fn first_step(&self, u0: Vec<f64>, v0: &[f64], body: &dyn BodyForce) -> Result<SimState> {
        let dt = self.cfg.dt;
        let mut accel = Vec::new();
        self.acceleration(&u0, 0.0, body, &mut accel)?;
        let mut u1: Vec<f64> = (0..u0.len())
            .map(|i| u0[i] + dt * v0[i] + 0.5 * dt * dt * accel[i])
            .collect();
        self.zero_constrained(&mut u1);
        let mut state = SimState {
            u_prev: u0.clone(),
            u_curr: u0,
            v_curr: vec![0.0; u1.len()],
            u_next: u1,
            k: 0,
            t: 0.0,
            dt,
            accel,
        };
        state.refresh_velocity();
        Ok(state)
    }

    /// Advances to step `k + 1`, computing `U^{k+2}`.
    pub fn step(&self, state: &mut SimState, body: &dyn BodyForce) -> Result<()> {
        std::mem::swap(&mut state.u_prev, &mut state.u_curr);
        std::mem::swap(&mut state.u_curr, &mut state.u_next);
        state.k += 1;
        state.t = state.k as f64 * state.dt;
        self.central_update(state, body)
    }

    fn central_update(&self, state: &mut SimState, body: &dyn BodyForce) -> Result<()> {
        let dt2 = state.dt * state.dt;
        let mut accel = std::mem::take(&mut state.accel);
        self.acceleration(&state.u_curr, state.t, body, &mut accel)?;
        for i in 0..state.u_next.len() {
            state.u_next[i] = if self.constrained[i] {
                0.0
            } else {
                (2.0 * state.u_curr[i] + dt2 * accel[i]) - state.u_prev[i]
            };
        }
        state.accel = accel;
        state.refresh_velocity();
        Ok(())
    }

    fn energy_row(&self, state: &SimState, work: f64) -> EnergyRow {
        let mode = match self.cfg.form {
            Form::Strong => MassMode::Consistent,
            Form::Weak => self.cfg.mass_mode,
        };
        let kinetic = 0.5 * self.mass.inner(&state.v_curr, &state.v_curr, mode);
        let potential = self
            .pd
            .potential_energy(&FeField::new(self.mesh, &state.u_curr), self.cfg.model);
        EnergyRow {
            step: state.k,
            time: state.t,
            kinetic,
            potential,
            total: kinetic + potential,
            work_bound: work,
        }
    }

    fn body_norm(&self, t: f64, body: &dyn BodyForce) -> f64 {
        if body.is_zero() {
            return 0.0;
        }
        let b = body.nodal(t, self.mesh);
        self.mass.inner(&b, &b, MassMode::Consistent).max(0.0).sqrt()
    }

    fn check_growth(&self, state: &SimState, scale: f64) -> Result<()> {
        let mut max_abs: f64 = 0.0;
        let mut finite = true;
        for &v in &state.u_next {
            finite &= v.is_finite();
            max_abs = max_abs.max(v.abs());
        }
        let limit = if scale > 0.0 {
            self.cfg.blowup_factor * scale
        } else {
            ABSOLUTE_BLOWUP
        };
        if !finite || max_abs > limit {
            return Err(Error::Instability {
                step: state.k + 1,
                time: (state.k + 1) as f64 * state.dt,
                max_abs: if finite { max_abs } else { f64::INFINITY },
            });
        }
        Ok(())
    }

    /// Runs from the given initial fields to `t_final`. `observer` sees the
    /// state at every step together with its energy row when recorded.
    pub fn run_with<U, V, O>(&self, u0: U, v0: V, body: &dyn BodyForce, mut observer: O) -> Result<RunOutput>
    where
        U: Fn(Point) -> Point,
        V: Fn(Point) -> Point,
        O: FnMut(&SimState, Option<&EnergyRow>),
    {
        let u0 = self.discretize(u0)?;
        let v0 = self.discretize(v0)?;
        self.run_discrete(u0, &v0, body, &mut observer)
    }

    pub fn run<U, V>(&self, u0: U, v0: V, body: &dyn BodyForce) -> Result<RunOutput>
    where
        U: Fn(Point) -> Point,
        V: Fn(Point) -> Point,
    {
        self.run_with(u0, v0, body, |_, _| {})
    }

    /// As [`Solver::run_with`] starting from nodal vectors.
    pub fn run_discrete<O>(&self, u0: Vec<f64>, v0: &[f64], body: &dyn BodyForce, observer: &mut O) -> Result<RunOutput>
    where
        O: FnMut(&SimState, Option<&EnergyRow>),
    {
        let n = self.cfg.n_steps()?;
        let mut state = self.first_step(u0, v0, body)?;
        let scale = state
            .u_curr
            .iter()
            .chain(&state.u_next)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.check_growth(&state, scale)?;

        let dt = self.cfg.dt;
        let mut report = EnergyReport {
            dt,
            rows: Vec::with_capacity(if self.cfg.record_energy { n + 1 } else { 0 }),
        };
        let mut sqrt_e0 = 0.0;
        let mut work = 0.0;
        loop {
            let row = if self.cfg.record_energy {
                work += self.body_norm(state.t, body) * dt;
                let mut row = self.energy_row(&state, 0.0);
                if state.k == 0 {
                    sqrt_e0 = row.total.max(0.0).sqrt();
                }
                row.work_bound = (sqrt_e0 + work).powi(2);
                report.rows.push(row);
                Some(row)
            } else {
                None
            };
            observer(&state, row.as_ref());
            if state.k == n {
                break;
            }
            self.step(&mut state, body)?;
            self.check_growth(&state, scale)?;
        }
        Ok(RunOutput {
            steps: n,
            final_state: state,
            energy: report,
        })
    }
}

/// Outcome of comparing an energy history against the work bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCheck {
    pub passed: bool,
    /// Smallest `(allowed - E^k) / max(bound_k, tiny)` over all steps.
    pub worst_margin: f64,
    pub worst_step: usize,
}

/// Default slack constant `C` of [`energy_stability_check`].
pub const DEFAULT_ENERGY_SLACK: f64 = 1.0;

/// Verifies `E^k <= bound_k (1 + rel_tol) + C dt t_k bound_k` at every row.
pub fn energy_stability_check(report: &EnergyReport, rel_tol: f64, slack: f64) -> EnergyCheck {
    let mut worst = f64::INFINITY;
    let mut worst_step = 0;
    let mut passed = true;
    for row in &report.rows {
        let bound = row.work_bound;
        let allowed = bound * (1.0 + rel_tol) + slack * report.dt * row.time * bound;
        if row.total > allowed {
            passed = false;
        }
        let margin = if bound > 0.0 {
            (allowed - row.total) / bound
        } else {
            allowed - row.total
        };
        if margin < worst {
            worst = margin;
            worst_step = row.step;
        }
    }
    EnergyCheck {
        passed,
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
        worst_step,
    }
}
