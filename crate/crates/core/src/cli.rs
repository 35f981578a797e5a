//! Command-line driver: `run`, `calibrate`, `cfl`, `converge`, `estimate`,
//! `mms` and `print-config`.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::assembly::{assemble_mass, ModelKind, Peridynamics};
use crate::config::{Config, FieldSelector, L1Choice};
use crate::dynamics::{energy_stability_check, BodyForce, EnergyReport, EnergyRow, Form, RunConfig, Solver};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::output::{self, AtomicFile, Summary};
use crate::potential::{critical_strain, potential_constants};
use crate::stability::{discrete_energy, rayleigh_sup, strong_radius, SpectralEstimate};
use crate::verification::{
    apriori_bound, converge_sweep, sweep_point_with, time_for_exponent, AprioriInputs, MmsForcing, SweepConfig,
    ILLUSTRATIVE_L1,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;

/// Fraction of the stable step used when `dt` is omitted.
pub const AUTO_DT_FRACTION: f64 = 0.9;
/// Relative tolerance of the energy-bound check reported by `run`.
const ENERGY_REL_TOL: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "pdfem", version, about = "Bond-based peridynamics solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel assembly.
    #[arg(long)]
    threads: Option<usize>,
    /// Sequential reductions.
    #[arg(long)]
    deterministic: bool,
    /// Snapshot stride, overriding `[output] stride`.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time integration with snapshot and energy output.
    Run(Common),
    /// Potential parameters and derived constants.
    Calibrate(Common),
    /// Largest stable time step of the linearized model.
    Cfl(Common),
    /// Manufactured-solution convergence sweep.
    Converge(Common),
    /// A-priori error estimate.
    Estimate(Common),
    /// Single manufactured-solution run with its error history.
    Mms(Common),
    /// Echo the parsed configuration in canonical form.
    PrintConfig(Common),
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Domain(_) | Error::Calibration(_) | Error::Mesh(_) => EXIT_CONFIG,
        Error::Instability { .. } => EXIT_UNSTABLE,
        Error::Sweep { source, .. } => exit_code(source),
        Error::Solver { .. } | Error::Estimate { .. } | Error::Io(_) => EXIT_SOLVER,
    }
}

/// Parses `args` (including the program name), executes the subcommand
/// and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (name, common) = match &cli.command {
        Command::Run(c) => ("run", c),
        Command::Calibrate(c) => ("calibrate", c),
        Command::Cfl(c) => ("cfl", c),
        Command::Converge(c) => ("converge", c),
        Command::Estimate(c) => ("estimate", c),
        Command::Mms(c) => ("mms", c),
        Command::PrintConfig(c) => ("print-config", c),
    };
    let mut cfg = match Config::from_path(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(stride) = common.stride {
        if stride == 0 {
            eprintln!("error: --stride must be positive");
            return EXIT_CONFIG;
        }
        cfg.stride = stride;
    }
    if common.deterministic {
        cfg.deterministic = true;
    }
    if name == "print-config" {
        print!("{}", cfg.to_text());
        return EXIT_OK;
    }

    let pool = match common.threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_SOLVER;
        }
    };

    let start = Instant::now();
    let mut summary = Summary::new();
    summary.set("subcommand", name);
    let result = pool.install(|| match &cli.command {
        Command::Run(_) => cmd_run(&cfg, &mut summary),
        Command::Calibrate(_) => cmd_calibrate(&cfg, &mut summary),
        Command::Cfl(_) => cmd_cfl(&cfg, &mut summary),
        Command::Converge(_) => cmd_converge(&cfg, &mut summary),
        Command::Estimate(_) => cmd_estimate(&cfg, &mut summary),
        Command::Mms(_) => cmd_mms(&cfg, &mut summary),
        Command::PrintConfig(_) => unreachable!("handled above"),
    });
    let code = match &result {
        Ok(()) => {
            summary.set("status", "ok");
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(e);
            summary.set("status", if code == EXIT_UNSTABLE { "unstable" } else { "error" });
            summary.set("message", e.to_string().replace('\n', " "));
            eprintln!("error: {e}");
            code
        }
    };
    summary.set_num("wall_time", start.elapsed().as_secs_f64());
    print!("{}", summary.to_text());
    if let Err(e) = output::write_atomic(&cfg.output_dir.join("summary.txt"), &summary.to_text()) {
        eprintln!("error: cannot write summary: {e}");
        return if code == EXIT_OK { EXIT_SOLVER } else { code };
    }
    code
}

fn spectral_estimate(cfg: &Config, pd: &Peridynamics, mesh: &Mesh) -> Result<SpectralEstimate> {
    let mass = assemble_mass(mesh);
    match cfg.form {
        Form::Strong => strong_radius(pd, mesh, &mass, &cfg.rayleigh_options()),
        Form::Weak => rayleigh_sup(pd, mesh, &mass, cfg.mass_mode, &cfg.rayleigh_options()),
    }
}

/// Time step from the configuration, or `0.9 dt_max` rounded down so that it
/// divides `T`.
fn choose_dt(cfg: &Config, pd: &Peridynamics, mesh: &Mesh, summary: &mut Summary) -> Result<f64> {
    if let Some(dt) = cfg.dt {
        summary.set("dt_source", "config");
        return Ok(dt);
    }
    let est = spectral_estimate(cfg, pd, mesh)?;
    let target = (AUTO_DT_FRACTION * est.dt_max).min(0.5);
    let n = (cfg.t_final / target).ceil().max(1.0);
    summary.set("dt_source", "cfl");
    summary.set_num("dt_max", est.dt_max);
    summary.set_num("mu_max", est.mu_max);
    Ok(cfg.t_final / n)
}

fn body_force<'a>(cfg: &Config, pd: &Peridynamics, mesh: &Mesh) -> Result<Box<dyn BodyForce + 'a>> {
    if let Some(b) = cfg.simple_forcing() {
        return Ok(b);
    }
    let case = cfg
        .manufactured_case()
        .ok_or_else(|| Error::config(0, "manufactured forcing without a case"))?;
    let oracle = pd.with_table(pd.table().refined(cfg.verification.oracle_factor)?)?;
    Ok(Box::new(MmsForcing::new(
        case,
        oracle,
        cfg.model,
        mesh,
        cfg.t_final,
        cfg.form == Form::Weak,
    )))
}

fn initial_data(cfg: &Config, solver: &Solver<'_>, mesh: &Mesh) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut fields = Vec::with_capacity(2);
    for (sel, velocity) in [(&cfg.u0, false), (&cfg.v0, true)] {
        let v = match sel {
            FieldSelector::FromCsv(p) => {
                let (u, v) = output::read_snapshot(&cfg.resolve(p), mesh.dim(), mesh.n_nodes())?;
                if velocity {
                    v
                } else {
                    u
                }
            }
            other => {
                let f = cfg
                    .analytic_field(other)
                    .ok_or_else(|| Error::config(0, "initial field needs a manufactured case"))?;
                solver.discretize(|x| f(x))?
            }
        };
        fields.push(v);
    }
    let v = fields.pop().unwrap_or_default();
    let u = fields.pop().unwrap_or_default();
    Ok((u, v))
}

fn cmd_run(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let mesh = cfg.mesh()?;
    let pd = cfg.peridynamics(&mesh)?;
    let dt = choose_dt(cfg, &pd, &mesh, summary)?;
    summary.set_num("dt", dt);
    summary.set("form", cfg.form);
    summary.set("model", cfg.model);
    summary.set("nodes", mesh.n_nodes());
    summary.set("bonds", pd.table().len());
    let run = RunConfig::new(cfg.t_final, dt)
        .with_form(cfg.form)
        .with_model(cfg.model)
        .with_mass_mode(cfg.mass_mode)
        .with_stride(cfg.stride);
    let solver = Solver::new(&pd, &mesh, run)?;
    let n_steps = solver.config().n_steps()?;
    let body = body_force(cfg, &pd, &mesh)?;
    let (u0, v0) = initial_data(cfg, &solver, &mesh)?;

    let dir = &cfg.output_dir;
    let mut snaps = AtomicFile::create(&dir.join("snapshots.csv"))?;
    let mut energy = AtomicFile::create(&dir.join("energy.csv"))?;
    snaps.write_line(output::snapshot_header(mesh.dim()))?;
    energy.write_line(output::ENERGY_HEADER)?;
    let mut rows: Vec<EnergyRow> = Vec::with_capacity(n_steps + 1);
    let mut io_err: Option<Error> = None;
    let mut last = (0usize, 0.0f64, 0.0f64);
    let stride = cfg.stride;
    let track_discrete = cfg.model == ModelKind::Linear && cfg.form == Form::Weak && body.is_zero();
    let mut discrete: Vec<f64> = Vec::new();
    let outcome = solver.run_discrete(u0, &v0, body.as_ref(), &mut |state, row| {
        if io_err.is_some() {
            return;
        }
        let mut write = || -> Result<()> {
            if state.k % stride == 0 || state.k == n_steps {
                for line in output::snapshot_rows(&mesh, state) {
                    snaps.write_line(&line)?;
                }
            }
            if let Some(r) = row {
                energy.write_line(&output::energy_row(r))?;
                rows.push(*r);
            }
            Ok(())
        };
        if let Err(e) = write() {
            io_err = Some(e);
        }
        if track_discrete {
            let e = discrete_energy(&pd, &mesh, solver.mass(), cfg.mass_mode, &state.u_curr, &state.u_next, dt);
            discrete.push(e.value);
        }
        let max_abs = state.u_curr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        last = (state.k, state.t, max_abs);
    });
    snaps.finish()?;
    energy.finish()?;
    if let Some(e) = io_err {
        return Err(e);
    }
    summary.set("steps", last.0);
    summary.set_num("final_time", last.1);
    summary.set_num("max_abs_u", last.2);
    let check = energy_stability_check(
        &EnergyReport { dt, rows },
        ENERGY_REL_TOL,
        cfg.verification.energy_slack,
    );
    summary.set("energy_check", if check.passed { "pass" } else { "fail" });
    summary.set_num("energy_worst_margin", check.worst_margin);
    if let Some(&e0) = discrete.first() {
        let drift = if e0 == 0.0 {
            0.0
        } else {
            discrete.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max)
        };
        summary.set_num("discrete_energy_drift", drift);
    }
    if let Err(Error::Instability { step, time, max_abs }) = &outcome {
        summary.set("unstable_step", step);
        summary.set_num("unstable_time", *time);
        summary.set_num("unstable_max_abs", *max_abs);
    }
    outcome.map(|_| ())
}

fn cmd_calibrate(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let spec = cfg.potential()?;
    let k = potential_constants(&spec);
    summary.set("d", spec.dim);
    summary.set("j_kind", spec.influence);
    summary.set_num("c", spec.c);
    summary.set_num("beta", spec.beta);
    summary.set_num("f_prime_0", k.f_prime_0);
    summary.set_num("f_inf", k.f_inf);
    summary.set_num("lambda", k.lambda);
    summary.set_num("g_c", k.g_c);
    summary.set_num("r_bar", k.r_bar);
    summary.set_num("critical_strain_at_epsilon", critical_strain(k.r_bar, cfg.epsilon)?);
    summary.set_num("m_d", k.m_d);
    summary.set("j_bar_1", k.j_bar_1.map_or("inf".to_string(), output::num));
    for (i, c) in k.sup.iter().enumerate() {
        summary.set_num(&format!("c{}", i + 1), *c);
    }
    summary.set("l1", k.l1.map_or("inf".to_string(), output::num));
    Ok(())
}

fn cmd_cfl(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let mesh = cfg.mesh()?;
    let pd = cfg.peridynamics(&mesh)?;
    let est = spectral_estimate(cfg, &pd, &mesh)?;
    summary.set_num("mu_max", est.mu_max);
    summary.set_num("dt_max", est.dt_max);
    summary.set("iterations", est.iterations);
    summary.set_num("residual", est.residual);
    summary.set("mass_mode", est.mass_mode);
    Ok(())
}

fn sweep_config(cfg: &Config) -> Result<SweepConfig> {
    let case = cfg
        .manufactured_case()
        .ok_or_else(|| Error::config(0, "no manufactured case: set [verification] case or b = mms(case)"))?;
    if cfg.domain != case.domain() {
        return Err(Error::config(0, "manufactured cases live on the unit box"));
    }
    let mut s = SweepConfig::new(case, cfg.potential()?, cfg.epsilon);
    s.h = cfg.h;
    s.dt = cfg.dt.unwrap_or(s.dt);
    s.t_final = cfg.t_final;
    s.form = cfg.form;
    s.model = cfg.model;
    s.mass_mode = cfg.mass_mode;
    s.lattice = cfg.m;
    s.oracle_factor = cfg.verification.oracle_factor;
    s.stride = cfg.stride;
    s.parallel = !cfg.deterministic;
    Ok(s)
}

fn cmd_converge(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let sweep = cfg
        .verification
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config(0, "converge needs [verification] sweep and values"))?;
    let mut s = sweep_config(cfg)?;
    if matches!(sweep, crate::verification::SweepParameter::Space(_)) {
        s.dt = cfg.dt.ok_or_else(|| Error::config(0, "a space sweep needs [discretization] dt"))?;
    }
    let report = converge_sweep(&s, sweep)?;
    let mut f = AtomicFile::create(&cfg.output_dir.join("rates.csv"))?;
    f.write_line("resolution,sup_Ek")?;
    for (r, e) in &report.points {
        f.write_line(&format!("{},{}", output::num(*r), output::num(*e)))?;
    }
    f.finish()?;
    summary.set_num("slope", report.slope);
    summary.set_num("intercept", report.intercept);
    summary.set_num("r2", report.r2);
    summary.set("asymptotic", report.is_asymptotic());
    Ok(())
}

fn cmd_estimate(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let v = &cfg.verification;
    let l1 = match v.l1 {
        L1Choice::Illustrative => ILLUSTRATIVE_L1,
        L1Choice::Value(x) => x,
        L1Choice::Computed => potential_constants(&cfg.potential()?)
            .l1
            .ok_or_else(|| Error::config(0, "L1 diverges for this influence function and dimension"))?,
    };
    let t_final = v
        .exponent
        .map_or(cfg.t_final, |a| time_for_exponent(a, cfg.epsilon, 1.0 + l1));
    let dt = cfg
        .dt
        .ok_or_else(|| Error::config(0, "estimate needs [discretization] dt"))?;
    let case = cfg.manufactured_case();
    let c_t = v
        .c_t
        .or_else(|| case.as_ref().map(|c| c.sup_utt_norm(t_final)))
        .ok_or_else(|| Error::config(0, "estimate needs c_t or a manufactured case"))?;
    let sup_u_h2 = v
        .sup_u_h2
        .or_else(|| case.as_ref().map(|c| c.sup_h2_norm(t_final)))
        .ok_or_else(|| Error::config(0, "estimate needs sup_u_h2 or a manufactured case"))?;
    let b = apriori_bound(&AprioriInputs {
        t_final,
        epsilon: cfg.epsilon,
        h: cfg.h,
        dt,
        c_t,
        sup_u_h2,
        l1,
    })?;
    summary.set_num("T", t_final);
    summary.set_num("epsilon", cfg.epsilon);
    summary.set_num("h", cfg.h);
    summary.set_num("dt", dt);
    summary.set_num("l1", l1);
    summary.set_num("c_t", c_t);
    summary.set_num("sup_u_h2", sup_u_h2);
    summary.set_num("exponent", b.exponent);
    summary.set_num("growth", b.growth);
    summary.set_num("exponent_times_growth", b.exponent * b.growth);
    summary.set_num("temporal", b.temporal);
    summary.set_num("spatial", b.spatial);
    summary.set_num("total", b.total);
    Ok(())
}

fn cmd_mms(cfg: &Config, summary: &mut Summary) -> Result<()> {
    let s = sweep_config(cfg)?;
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => {
            let mesh = cfg.mesh()?;
            let pd = cfg.peridynamics(&mesh)?;
            choose_dt(cfg, &pd, &mesh, summary)?
        }
    };
    let mut f = AtomicFile::create(&cfg.output_dir.join("errors.csv"))?;
    f.write_line("step,time,error_u,error_v,E")?;
    let mut io_err = None;
    let sup = sweep_point_with(&s, cfg.h, dt, |k, t, e| {
        let line = format!(
            "{k},{},{},{},{}",
            output::num(t),
            output::num(e.displacement),
            output::num(e.velocity),
            output::num(e.total)
        );
        if io_err.is_none() {
            io_err = f.write_line(&line).err();
        }
    });
    f.finish()?;
    if let Some(e) = io_err {
        return Err(e);
    }
    let sup = sup?;
    summary.set_num("dt", dt);
    summary.set_num("sup_Ek", sup);
    Ok(())
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    run_cli(std::env::args_os())
}
