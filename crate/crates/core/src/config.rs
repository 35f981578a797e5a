//! Strict sectioned `key = value` configuration.
//!
//! Lines are `[section]` headers, `key = value` pairs, blank lines or
//! comments starting with `#`. Unknown sections and keys, duplicates and
//! malformed values are errors carrying the offending line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::assembly::{MassMode, ModelKind, Peridynamics};
use crate::dynamics::{BodyForce, ConstantForce, Form, ZeroForce};
use crate::error::{Error, Result};
use crate::geometry::{build_horizon_quadrature, build_uniform_mesh, default_lattice_refinement, BoxDomain, Mesh, Point};
use crate::potential::{InfluenceKind, PotentialSpec};
use crate::stability::RayleighOptions;
use crate::verification::{ManufacturedCase, SweepParameter, TimeFactor};

const SCHEMA: &[(&str, &[&str])] = &[
    ("domain", &["d", "box"]),
    (
        "discretization",
        &["h", "epsilon", "m", "dt", "T", "form", "model", "mass_mode", "deterministic"],
    ),
    ("material", &["lambda", "g_c", "c", "beta", "j_kind"]),
    ("ic", &["u0", "v0"]),
    ("forcing", &["b"]),
    ("output", &["directory", "stride"]),
    ("stability", &["tol", "max_iter", "trials", "seed"]),
    (
        "verification",
        &[
            "case",
            "amplitude",
            "omega",
            "sweep",
            "values",
            "oracle_factor",
            "energy_slack",
            "c_t",
            "sup_u_h2",
            "l1",
            "exponent",
        ],
    ),
];

/// Material given either by its elastic and fracture constants or by the
/// potential parameters directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Material {
    Elastic { lambda: f64, g_c: f64 },
    Potential { c: f64, beta: f64 },
}

/// Initial displacement or velocity field.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSelector {
    Zero,
    /// `amplitude * prod_i sin(k pi (x_i - lo_i) / L_i)` in every component.
    SineMode { k: u32, amplitude: f64 },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))` in every component.
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    /// Nodal values from the last step of a snapshot CSV.
    FromCsv(PathBuf),
    /// The manufactured solution at `t = 0`.
    Mms,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSelector {
    Zero,
    Constant(Vec<f64>),
    Mms(String),
}

/// Source of `L1` in the a-priori estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum L1Choice {
    Illustrative,
    Computed,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationSettings {
    pub case: Option<String>,
    pub amplitude: Option<f64>,
    pub omega: Option<f64>,
    pub sweep: Option<SweepParameter>,
    pub oracle_factor: usize,
    pub energy_slack: f64,
    pub c_t: Option<f64>,
    pub sup_u_h2: Option<f64>,
    pub l1: L1Choice,
    /// Target exponent `(1 + L1) T / eps^2`; fixes `T` for `estimate`.
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub domain: BoxDomain,
    pub h: f64,
    pub epsilon: f64,
    pub m: Option<usize>,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub form: Form,
    pub model: ModelKind,
    pub mass_mode: MassMode,
    pub deterministic: bool,
    pub material: Material,
    pub influence: InfluenceKind,
    pub u0: FieldSelector,
    pub v0: FieldSelector,
    pub forcing: ForcingSelector,
    pub output_dir: PathBuf,
    pub stride: usize,
    pub stability_tol: f64,
    pub stability_max_iter: usize,
    pub stability_trials: usize,
    pub stability_seed: u64,
    pub verification: VerificationSettings,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

struct Entry {
    value: String,
    line: usize,
}

struct Document {
    entries: BTreeMap<(String, String), Entry>,
    sections: BTreeMap<String, usize>,
    last_line: usize,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut doc = Document {
            entries: BTreeMap::new(),
            sections: BTreeMap::new(),
            last_line: text.lines().count().max(1),
        };
        let mut current: Option<(&str, &[&str])> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(line, "unterminated section header"))?
                    .trim();
                let sec = SCHEMA
                    .iter()
                    .find(|(n, _)| *n == name)
                    .ok_or_else(|| Error::config(line, format!("unknown section [{name}]")))?;
                if doc.sections.insert(name.to_string(), line).is_some() {
                    return Err(Error::config(line, format!("duplicate section [{name}]")));
                }
                current = Some(*sec);
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected `key = value`, found `{s}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let (section, keys) = current.ok_or_else(|| Error::config(line, "key outside of any section"))?;
            if !keys.contains(&key) {
                return Err(Error::config(line, format!("unknown key `{key}` in [{section}]")));
            }
            if value.is_empty() {
                return Err(Error::config(line, format!("empty value for `{key}`")));
            }
            let slot = (section.to_string(), key.to_string());
            if let Some(prev) = doc.entries.get(&slot) {
                return Err(Error::config(
                    line,
                    format!("duplicate key `{key}` (first set on line {})", prev.line),
                ));
            }
            doc.entries.insert(
                slot,
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(doc)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn missing(&self, section: &str, key: &str) -> Error {
        let line = self.sections.get(section).copied().unwrap_or(self.last_line);
        Error::config(line, format!("missing required key `{key}` in [{section}]"))
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry> {
        self.get(section, key).ok_or_else(|| self.missing(section, key))
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<(T, usize)>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|_| Error::config(e.line, format!("`{key}` must be {what}, found `{}`", e.value))),
        }
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<(f64, usize)>> {
        let v = self.parsed::<f64>(section, key, "a number")?;
        if let Some((x, line)) = v {
            if !x.is_finite() {
                return Err(Error::config(line, format!("`{key}` must be finite")));
            }
        }
        Ok(v)
    }

    fn choice<T: std::str::FromStr<Err = String>>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|m| Error::config(e.line, m)),
        }
    }
}

fn number_list(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::config(line, format!("`{key}` must be a comma-separated list of numbers")))
        })
        .collect()
}

/// Splits `name(a, b)` into the name and its arguments.
fn call(value: &str, line: usize) -> Result<(&str, Vec<&str>)> {
    match value.split_once('(') {
        None => Ok((value.trim(), Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .trim_end()
                .strip_suffix(')')
                .ok_or_else(|| Error::config(line, format!("missing `)` in `{value}`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((name.trim(), args))
        }
    }
}

fn arg_number(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::config(line, format!("expected a number, found `{s}`")))
}

fn field_selector(e: &Entry, dim: usize) -> Result<FieldSelector> {
    let (name, args) = call(&e.value, e.line)?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::config(e.line, format!("`{name}` takes {n} argument(s), found {}", args.len())))
        }
    };
    match name {
        "zero" => {
            arity(0)?;
            Ok(FieldSelector::Zero)
        }
        "mms" => {
            arity(0)?;
            Ok(FieldSelector::Mms)
        }
        "sine_mode" => {
            arity(2)?;
            let k = args[0]
                .parse::<u32>()
                .ok()
                .filter(|k| *k > 0)
                .ok_or_else(|| Error::config(e.line, "sine_mode needs a positive integer mode"))?;
            Ok(FieldSelector::SineMode {
                k,
                amplitude: arg_number(args[1], e.line)?,
            })
        }
        "gaussian" => {
            arity(dim + 2)?;
            let center = args[..dim]
                .iter()
                .map(|a| arg_number(a, e.line))
                .collect::<Result<Vec<_>>>()?;
            let width = arg_number(args[dim], e.line)?;
            if !(width > 0.0) {
                return Err(Error::config(e.line, "gaussian width must be positive"));
            }
            Ok(FieldSelector::Gaussian {
                center,
                width,
                amplitude: arg_number(args[dim + 1], e.line)?,
            })
        }
        "from_csv" => {
            arity(1)?;
            Ok(FieldSelector::FromCsv(PathBuf::from(args[0])))
        }
        other => Err(Error::config(
            e.line,
            format!("unknown field selector `{other}` (expected zero, sine_mode, gaussian, from_csv or mms)"),
        )),
    }
}

fn forcing_selector(e: &Entry, dim: usize) -> Result<ForcingSelector> {
    let (name, args) = call(&e.value, e.line)?;
    match name {
        "zero" if args.is_empty() => Ok(ForcingSelector::Zero),
        "constant" if args.len() == dim => Ok(ForcingSelector::Constant(
            args.iter().map(|a| arg_number(a, e.line)).collect::<Result<_>>()?,
        )),
        "constant" => Err(Error::config(e.line, format!("constant forcing needs {dim} component(s)"))),
        "mms" if args.len() == 1 => {
            let case = ManufacturedCase::by_name(args[0])
                .ok_or_else(|| Error::config(e.line, format!("unknown manufactured case `{}`", args[0])))?;
            if case.dim() != dim {
                return Err(Error::config(e.line, format!("case `{}` is not {dim}-dimensional", args[0])));
            }
            Ok(ForcingSelector::Mms(args[0].to_string()))
        }
        _ => Err(Error::config(
            e.line,
            format!("invalid forcing `{}` (expected zero, constant(...) or mms(case))", e.value),
        )),
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(0, format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let doc = Document::parse(text)?;

        let d_entry = doc.required("domain", "d")?;
        let dim = match d_entry.value.as_str() {
            "1" => 1,
            "2" => 2,
            other => return Err(Error::config(d_entry.line, format!("d must be 1 or 2, found `{other}`"))),
        };
        let domain = match doc.get("domain", "box") {
            None => BoxDomain::unit(dim),
            Some(e) => {
                let v = number_list(&e.value, e.line, "box")?;
                if v.len() != 2 * dim {
                    return Err(Error::config(e.line, format!("box needs {} numbers: lo0, hi0[, lo1, hi1]", 2 * dim)));
                }
                let lo: Vec<f64> = v.iter().step_by(2).copied().collect();
                let hi: Vec<f64> = v.iter().skip(1).step_by(2).copied().collect();
                BoxDomain::new(&lo, &hi).map_err(|err| Error::config(e.line, err.to_string()))?
            }
        };

        let positive = |key: &str| -> Result<(f64, usize)> {
            let (v, line) = doc.number("discretization", key)?.ok_or_else(|| doc.missing("discretization", key))?;
            if v > 0.0 {
                Ok((v, line))
            } else {
                Err(Error::config(line, format!("`{key}` must be positive")))
            }
        };
        let (h, _) = positive("h")?;
        let (epsilon, eps_line) = positive("epsilon")?;
        if epsilon >= domain.min_extent() {
            return Err(Error::config(
                eps_line,
                format!("epsilon = {epsilon} must be smaller than the smallest box extent {}", domain.min_extent()),
            ));
        }
        let (t_final, _) = positive("T")?;
        let m = match doc.parsed::<usize>("discretization", "m", "an integer")? {
            Some((m, line)) if m < 2 => return Err(Error::config(line, "m must be at least 2")),
            v => v.map(|(m, _)| m),
        };
        let dt = match doc.number("discretization", "dt")? {
            Some((dt, line)) if !(dt > 0.0 && dt < 1.0) => {
                return Err(Error::config(line, format!("dt must lie in (0, 1), found {dt}")))
            }
            v => v.map(|(dt, _)| dt),
        };
        let form = doc.choice::<Form>("discretization", "form")?.unwrap_or_default();
        let model = doc.choice::<ModelKind>("discretization", "model")?.unwrap_or_default();
        let mass_mode = doc.choice::<MassMode>("discretization", "mass_mode")?.unwrap_or_default();
        let deterministic = doc
            .parsed::<bool>("discretization", "deterministic", "true or false")?
            .map_or(false, |(b, _)| b);

        let lambda = doc.number("material", "lambda")?;
        let g_c = doc.number("material", "g_c")?;
        let c = doc.number("material", "c")?;
        let beta = doc.number("material", "beta")?;
        let elastic = lambda.is_some() || g_c.is_some();
        let direct = c.is_some() || beta.is_some();
        let material = match (elastic, direct) {
            (true, true) => {
                let line = [lambda, g_c, c, beta].iter().flatten().map(|(_, l)| *l).max().unwrap_or(0);
                return Err(Error::config(
                    line,
                    "conflicting material: give either (lambda, g_c) or (c, beta), not both",
                ));
            }
            (true, false) => Material::Elastic {
                lambda: lambda.ok_or_else(|| doc.missing("material", "lambda"))?.0,
                g_c: g_c.ok_or_else(|| doc.missing("material", "g_c"))?.0,
            },
            (false, true) => Material::Potential {
                c: c.ok_or_else(|| doc.missing("material", "c"))?.0,
                beta: beta.ok_or_else(|| doc.missing("material", "beta"))?.0,
            },
            (false, false) => return Err(doc.missing("material", "lambda")),
        };
        let influence = doc.choice::<InfluenceKind>("material", "j_kind")?.unwrap_or_default();

        let u0 = doc.get("ic", "u0").map(|e| field_selector(e, dim)).transpose()?.unwrap_or(FieldSelector::Zero);
        let v0 = doc.get("ic", "v0").map(|e| field_selector(e, dim)).transpose()?.unwrap_or(FieldSelector::Zero);
        let forcing = doc
            .get("forcing", "b")
            .map(|e| forcing_selector(e, dim))
            .transpose()?
            .unwrap_or(ForcingSelector::Zero);

        let output_dir = doc
            .get("output", "directory")
            .map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
        let stride = match doc.parsed::<usize>("output", "stride", "a positive integer")? {
            Some((0, line)) => return Err(Error::config(line, "stride must be positive")),
            v => v.map_or(1, |(s, _)| s),
        };

        let defaults = RayleighOptions::default();
        let stability_tol = doc.number("stability", "tol")?.map_or(defaults.tol, |v| v.0);
        let stability_max_iter = doc
            .parsed::<usize>("stability", "max_iter", "an integer")?
            .map_or(defaults.max_iter, |v| v.0);
        let stability_trials = doc
            .parsed::<usize>("stability", "trials", "an integer")?
            .map_or(defaults.trials, |v| v.0);
        let stability_seed = doc.parsed::<u64>("stability", "seed", "an integer")?.map_or(defaults.seed, |v| v.0);

        let case = match doc.get("verification", "case") {
            None => None,
            Some(e) => {
                let c = ManufacturedCase::by_name(&e.value)
                    .ok_or_else(|| Error::config(e.line, format!("unknown manufactured case `{}`", e.value)))?;
                if c.dim() != dim {
                    return Err(Error::config(e.line, format!("case `{}` is not {dim}-dimensional", e.value)));
                }
                Some(e.value.clone())
            }
        };
        let sweep = match (doc.get("verification", "sweep"), doc.get("verification", "values")) {
            (None, None) => None,
            (Some(_), None) => return Err(doc.missing("verification", "values")),
            (None, Some(_)) => return Err(doc.missing("verification", "sweep")),
            (Some(kind), Some(vals)) => {
                let v = number_list(&vals.value, vals.line, "values")?;
                if v.len() < 2 || v.windows(2).any(|w| !(w[1] < w[0])) || v.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::config(vals.line, "values must be positive and strictly decreasing"));
                }
                match kind.value.as_str() {
                    "space" => Some(SweepParameter::Space(v)),
                    "time" => Some(SweepParameter::Time(v)),
                    other => {
                        return Err(Error::config(kind.line, format!("sweep must be space or time, found `{other}`")))
                    }
                }
            }
        };
        let l1 = match doc.get("verification", "l1") {
            None => L1Choice::Illustrative,
            Some(e) => match e.value.as_str() {
                "illustrative" => L1Choice::Illustrative,
                "computed" => L1Choice::Computed,
                v => L1Choice::Value(
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite() && *x >= 0.0)
                        .ok_or_else(|| Error::config(e.line, "l1 must be illustrative, computed or a nonnegative number"))?,
                ),
            },
        };
        let verification = VerificationSettings {
            case,
            amplitude: doc.number("verification", "amplitude")?.map(|v| v.0),
            omega: doc.number("verification", "omega")?.map(|v| v.0),
            sweep,
            oracle_factor: match doc.parsed::<usize>("verification", "oracle_factor", "an integer")? {
                Some((0, line)) => return Err(Error::config(line, "oracle_factor must be positive")),
                v => v.map_or(4, |v| v.0),
            },
            energy_slack: doc.number("verification", "energy_slack")?.map_or(1.0, |v| v.0),
            c_t: doc.number("verification", "c_t")?.map(|v| v.0),
            sup_u_h2: doc.number("verification", "sup_u_h2")?.map(|v| v.0),
            l1,
            exponent: doc.number("verification", "exponent")?.map(|v| v.0),
        };

        let cfg = Config {
            domain,
            h,
            epsilon,
            m,
            dt,
            t_final,
            form,
            model,
            mass_mode,
            deterministic,
            material,
            influence,
            u0,
            v0,
            forcing,
            output_dir,
            stride,
            stability_tol,
            stability_max_iter,
            stability_trials,
            stability_seed,
            verification,
            base_dir: base_dir.to_path_buf(),
        };
        if (cfg.u0 == FieldSelector::Mms || cfg.v0 == FieldSelector::Mms) && cfg.case_name().is_none() {
            let line = doc.get("ic", "u0").or(doc.get("ic", "v0")).map_or(0, |e| e.line);
            return Err(Error::config(line, "mms initial data needs b = mms(case) or [verification] case"));
        }
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        match self.material {
            Material::Elastic { lambda, g_c } => PotentialSpec::from_material(lambda, g_c, self.influence, self.dim()),
            Material::Potential { c, beta } => PotentialSpec::new(c, beta, self.influence, self.dim()),
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_uniform_mesh(&self.domain, self.h)
    }

    /// Lattice refinement of the horizon table on `mesh`.
    pub fn lattice(&self, mesh: &Mesh) -> usize {
        self.m.unwrap_or_else(|| default_lattice_refinement(self.epsilon, mesh.spacing()))
    }

    pub fn peridynamics(&self, mesh: &Mesh) -> Result<Peridynamics> {
        let spec = self.potential()?;
        let table = build_horizon_quadrature(self.epsilon, self.lattice(mesh), self.influence, self.dim())?;
        Ok(Peridynamics::new(spec, table, self.domain.clone())?.with_parallel(!self.deterministic))
    }

    pub fn rayleigh_options(&self) -> RayleighOptions {
        RayleighOptions {
            tol: self.stability_tol,
            max_iter: self.stability_max_iter,
            trials: self.stability_trials,
            seed: self.stability_seed,
            ..RayleighOptions::default()
        }
    }

    fn case_name(&self) -> Option<&str> {
        match &self.forcing {
            ForcingSelector::Mms(name) => Some(name),
            _ => self.verification.case.as_deref(),
        }
    }

    /// Manufactured case from the forcing or the verification section, with
    /// amplitude and frequency overrides applied.
    pub fn manufactured_case(&self) -> Option<ManufacturedCase> {
        let mut case = ManufacturedCase::by_name(self.case_name()?)?;
        if let TimeFactor::Cosine { amp, omega } = &mut case.time {
            if let Some(a) = self.verification.amplitude {
                *amp = a;
            }
            if let Some(w) = self.verification.omega {
                *omega = w;
            }
        }
        Some(case)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Point function of an analytic initial-field selector.
    pub fn analytic_field(&self, sel: &FieldSelector) -> Option<Box<dyn Fn(Point) -> Point + Sync + '_>> {
        let d = self.dim();
        let lo = self.domain.lo();
        let ext: Vec<f64> = (0..d).map(|i| self.domain.extent(i)).collect();
        let fill = move |v: f64| {
            let mut p = [0.0; 2];
            p[..d].fill(v);
            p
        };
        match sel {
            FieldSelector::Zero => Some(Box::new(|_| [0.0; 2])),
            FieldSelector::SineMode { k, amplitude } => {
                let (k, a) = (f64::from(*k), *amplitude);
                Some(Box::new(move |x| {
                    let v = (0..d).fold(a, |acc, i| {
                        acc * (k * std::f64::consts::PI * (x[i] - lo[i]) / ext[i]).sin()
                    });
                    fill(v)
                }))
            }
            FieldSelector::Gaussian { center, width, amplitude } => {
                let (c, w, a) = (center.clone(), *width, *amplitude);
                Some(Box::new(move |x| {
                    let r2: f64 = (0..d).map(|i| (x[i] - c[i]).powi(2)).sum();
                    fill(a * (-r2 / (2.0 * w * w)).exp())
                }))
            }
            FieldSelector::Mms => {
                let case = self.manufactured_case()?;
                Some(Box::new(move |x| case.u(0.0, x)))
            }
            FieldSelector::FromCsv(_) => None,
        }
    }

    /// Analytic body force, or `None` for the manufactured forcing, which
    /// needs a mesh and an oracle.
    pub fn simple_forcing(&self) -> Option<Box<dyn BodyForce>> {
        match &self.forcing {
            ForcingSelector::Zero => Some(Box::new(ZeroForce)),
            ForcingSelector::Constant(v) => {
                let mut b = [0.0; 2];
                b[..v.len()].copy_from_slice(v);
                Some(Box::new(ConstantForce(b)))
            }
            ForcingSelector::Mms(_) => None,
        }
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let (lo, hi) = (self.domain.lo(), self.domain.hi());
        let bx: Vec<f64> = (0..d).flat_map(|i| [lo[i], hi[i]]).collect();
        let _ = writeln!(s, "[domain]\nd = {d}\nbox = {}\n", list(&bx));
        let _ = writeln!(s, "[discretization]");
        let _ = writeln!(s, "h = {:?}\nepsilon = {:?}", self.h, self.epsilon);
        if let Some(m) = self.m {
            let _ = writeln!(s, "m = {m}");
        }
        if let Some(dt) = self.dt {
            let _ = writeln!(s, "dt = {dt:?}");
        }
        let _ = writeln!(
            s,
            "T = {:?}\nform = {}\nmodel = {}\nmass_mode = {}\ndeterministic = {}\n",
            self.t_final, self.form, self.model, self.mass_mode, self.deterministic
        );
        let _ = writeln!(s, "[material]");
        match self.material {
            Material::Elastic { lambda, g_c } => {
                let _ = writeln!(s, "lambda = {lambda:?}\ng_c = {g_c:?}");
            }
            Material::Potential { c, beta } => {
                let _ = writeln!(s, "c = {c:?}\nbeta = {beta:?}");
            }
        }
        let _ = writeln!(s, "j_kind = {}\n", self.influence);
        let sel = |f: &FieldSelector| match f {
            FieldSelector::Zero => "zero".to_string(),
            FieldSelector::Mms => "mms".to_string(),
            FieldSelector::SineMode { k, amplitude } => format!("sine_mode({k}, {amplitude:?})"),
            FieldSelector::Gaussian { center, width, amplitude } => {
                format!("gaussian({}, {width:?}, {amplitude:?})", list(center))
            }
            FieldSelector::FromCsv(p) => format!("from_csv({})", p.display()),
        };
        let _ = writeln!(s, "[ic]\nu0 = {}\nv0 = {}\n", sel(&self.u0), sel(&self.v0));
        let b = match &self.forcing {
            ForcingSelector::Zero => "zero".to_string(),
            ForcingSelector::Constant(v) => format!("constant({})", list(v)),
            ForcingSelector::Mms(c) => format!("mms({c})"),
        };
        let _ = writeln!(s, "[forcing]\nb = {b}\n");
        let _ = writeln!(
            s,
            "[output]\ndirectory = {}\nstride = {}\n",
            self.output_dir.display(),
            self.stride
        );
        let _ = writeln!(
            s,
            "[stability]\ntol = {:?}\nmax_iter = {}\ntrials = {}\nseed = {}\n",
            self.stability_tol, self.stability_max_iter, self.stability_trials, self.stability_seed
        );
        let v = &self.verification;
        let _ = writeln!(s, "[verification]");
        if let Some(c) = &v.case {
            let _ = writeln!(s, "case = {c}");
        }
        if let Some(a) = v.amplitude {
            let _ = writeln!(s, "amplitude = {a:?}");
        }
        if let Some(w) = v.omega {
            let _ = writeln!(s, "omega = {w:?}");
        }
        match &v.sweep {
            Some(SweepParameter::Space(vals)) => {
                let _ = writeln!(s, "sweep = space\nvalues = {}", list(vals));
            }
            Some(SweepParameter::Time(vals)) => {
                let _ = writeln!(s, "sweep = time\nvalues = {}", list(vals));
            }
            None => {}
        }
        let _ = writeln!(s, "oracle_factor = {}\nenergy_slack = {:?}", v.oracle_factor, v.energy_slack);
        if let Some(c) = v.c_t {
            let _ = writeln!(s, "c_t = {c:?}");
        }
        if let Some(c) = v.sup_u_h2 {
            let _ = writeln!(s, "sup_u_h2 = {c:?}");
        }
        let l1 = match v.l1 {
            L1Choice::Illustrative => "illustrative".to_string(),
            L1Choice::Computed => "computed".to_string(),
            L1Choice::Value(x) => format!("{x:?}"),
        };
        let _ = writeln!(s, "l1 = {l1}");
        if let Some(e) = v.exponent {
            let _ = writeln!(s, "exponent = {e:?}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nd = 1\n\n[discretization]\nh = 0.02\nepsilon = 0.1\nT = 0.5\n\n[material]\nc = 1\nbeta = 1\n";

    fn parse(text: &str) -> Result<Config> {
        Config::parse(text, Path::new("."))
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_round_trip() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.dim(), 1);
        assert_eq!(cfg.dt, None);
        assert_eq!(cfg.form, Form::Strong);
        let again = parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn full_round_trip() {
        let text = "[domain]\nd = 2\nbox = 0, 2, 0, 1\n[discretization]\nh = 0.1\nepsilon = 0.3\nm = 6\ndt = 0.01\nT = 0.1\nform = weak\nmodel = linear\nmass_mode = lumped\ndeterministic = true\n[material]\nlambda = 2\ng_c = 0.5\nj_kind = quartic\n[ic]\nu0 = gaussian(1, 0.5, 0.1, 0.01)\nv0 = sine_mode(2, 0.3)\n[forcing]\nb = constant(0.5, -1)\n[output]\ndirectory = res\nstride = 5\n[verification]\nsweep = time\nvalues = 0.02, 0.01\nl1 = 3.5\nexponent = 8\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.material, Material::Elastic { lambda: 2.0, g_c: 0.5 });
        assert_eq!(cfg.verification.sweep, Some(SweepParameter::Time(vec![0.02, 0.01])));
        assert_eq!(parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn conflicting_material() {
        let err = parse(&format!("{MINIMAL}lambda = 1\ng_c = 1\n")).unwrap_err();
        assert!(err.to_string().contains("conflicting"));
        assert_eq!(line_of(err), 13);
    }

    #[test]
    fn dt_of_one_rejected() {
        let text = MINIMAL.replace("T = 0.5", "T = 0.5\ndt = 1.0");
        let err = parse(&text).unwrap_err();
        assert_eq!(line_of(err), 8);
    }

    #[test]
    fn strict_keys_and_sections() {
        assert_eq!(line_of(parse(&format!("{MINIMAL}speed = 3\n")).unwrap_err()), 12);
        assert_eq!(line_of(parse(&format!("{MINIMAL}[extras]\n")).unwrap_err()), 12);
        assert_eq!(line_of(parse(&format!("{MINIMAL}c = 2\n")).unwrap_err()), 12);
        let missing = parse(&MINIMAL.replace("epsilon = 0.1\n", "")).unwrap_err();
        assert!(missing.to_string().contains("epsilon"));
        assert_eq!(line_of(missing), 4);
    }

    #[test]
    fn horizon_must_fit_in_box() {
        let err = parse(&MINIMAL.replace("epsilon = 0.1", "epsilon = 1.5")).unwrap_err();
        assert_eq!(line_of(err), 6);
    }

    #[test]
    fn mms_initial_data_needs_a_case() {
        let text = format!("{MINIMAL}[ic]\nu0 = mms\n");
        assert!(parse(&text).is_err());
        let cfg = parse(&format!("{text}[forcing]\nb = mms(sine1d)\n")).unwrap();
        let u = cfg.analytic_field(&cfg.u0).unwrap();
        assert!((u([0.5, 0.0])[0] - 0.05).abs() < 1e-15);
    }
}
