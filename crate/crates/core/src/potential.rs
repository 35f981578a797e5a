//! Double-well bond potential, influence functions and material calibration.
//!
//! The pair potential is `f(r) = c (1 - exp(-beta r))`, evaluated at
//! `r = |y - x| S^2`. It is positive, increasing and concave with
//! `f'(0) = c beta` and `f(inf) = c`. The composed profile `F1(r) = f(r^2)`
//! is convex near zero and concave beyond its inflection point `r_bar`,
//! which is what produces bond softening past the critical strain.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Volume of the unit ball in dimension `n` (`n = 0..=3`).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unit ball volume requested for unsupported dimension {n}"),
    }
}

/// Lamé prefactor `C_d` linking `f'(0) M_d` to the limiting Lamé constant.
pub fn lame_factor(d: usize) -> f64 {
    match d {
        1 => 2.0 / 3.0,
        2 => 1.0 / 4.0,
        3 => 1.0 / 5.0,
        _ => panic!("Lamé factor requested for unsupported dimension {d}"),
    }
}

/// Shape of the influence function `J` on the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InfluenceKind {
    /// `J(r) = 1`
    Constant,
    /// `J(r) = 1 - r`
    #[default]
    LinearDecay,
    /// `J(r) = (1 - r^2)^4`
    Quartic,
}

impl InfluenceKind {
    pub const ALL: [InfluenceKind; 3] = [
        InfluenceKind::Constant,
        InfluenceKind::LinearDecay,
        InfluenceKind::Quartic,
    ];

    /// Polynomial coefficients `(power, coefficient)` of `J` on `[0, 1)`.
    fn terms(self) -> &'static [(i32, f64)] {
        match self {
            InfluenceKind::Constant => &[(0, 1.0)],
            InfluenceKind::LinearDecay => &[(0, 1.0), (1, -1.0)],
            InfluenceKind::Quartic => &[(0, 1.0), (2, -4.0), (4, 6.0), (6, -4.0), (8, 1.0)],
        }
    }

    #[inline]
    pub fn eval(self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        match self {
            InfluenceKind::Constant => 1.0,
            InfluenceKind::LinearDecay => 1.0 - r,
            InfluenceKind::Quartic => {
                let s = 1.0 - r * r;
                let s2 = s * s;
                s2 * s2
            }
        }
    }

    /// Upper bound of `J` on the unit ball.
    pub fn max_value(self) -> f64 {
        1.0
    }

    /// `int_0^1 J(r) r^p dr`, or `None` when the integral diverges.
    pub fn moment(self, p: i32) -> Option<f64> {
        let mut total = 0.0;
        for &(k, coeff) in self.terms() {
            let exponent = p + k;
            if exponent <= -1 {
                return None;
            }
            total += coeff / f64::from(exponent + 1);
        }
        Some(total)
    }

    pub fn name(self) -> &'static str {
        match self {
            InfluenceKind::Constant => "constant",
            InfluenceKind::LinearDecay => "linear_decay",
            InfluenceKind::Quartic => "quartic",
        }
    }
}

impl fmt::Display for InfluenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InfluenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(InfluenceKind::Constant),
            "linear_decay" => Ok(InfluenceKind::LinearDecay),
            "quartic" => Ok(InfluenceKind::Quartic),
            other => Err(format!(
                "unknown influence function `{other}` (expected constant, linear_decay or quartic)"
            )),
        }
    }
}

/// Bond potential parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    /// Asymptotic bond energy `f_inf`.
    pub c: f64,
    /// Decay rate; `f'(0) = c * beta`.
    pub beta: f64,
    pub influence: InfluenceKind,
    /// Spatial dimension (1, 2 or 3).
    pub dim: usize,
}

impl PotentialSpec {
    pub fn new(c: f64, beta: f64, influence: InfluenceKind, dim: usize) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("potential scale c must be positive, got {c}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("decay rate beta must be positive, got {beta}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        Ok(PotentialSpec {
            c,
            beta,
            influence,
            dim,
        })
    }

    /// Builds the potential whose limiting Lamé constant and fracture
    /// energy are `lambda` and `g_c`.
    pub fn from_material(
        lambda: f64,
        g_c: f64,
        influence: InfluenceKind,
        dim: usize,
    ) -> Result<Self> {
        let cal = calibrate(lambda, g_c, dim, influence)?;
        PotentialSpec::new(cal.c, cal.beta, influence, dim)
    }

    fn check_arg(r: f64) -> Result<()> {
        if r < 0.0 || r.is_nan() {
            Err(Error::domain(format!("potential argument must be nonnegative, got {r}")))
        } else {
            Ok(())
        }
    }

    pub fn f(&self, r: f64) -> Result<f64> {
        Self::check_arg(r)?;
        Ok(-self.c * (-self.beta * r).exp_m1())
    }

    pub fn f_prime(&self, r: f64) -> Result<f64> {
        Self::check_arg(r)?;
        Ok(self.df(r))
    }

    pub fn f_second(&self, r: f64) -> Result<f64> {
        Self::check_arg(r)?;
        Ok(-self.c * self.beta * self.beta * (-self.beta * r).exp())
    }

    /// `f'(r)` without the domain check, for the force kernels.
    #[inline]
    pub(crate) fn df(&self, r: f64) -> f64 {
        self.c * self.beta * (-self.beta * r).exp()
    }

    /// `f(r)` without the domain check.
    #[inline]
    pub(crate) fn f_unchecked(&self, r: f64) -> f64 {
        -self.c * (-self.beta * r).exp_m1()
    }

    pub fn f_prime_zero(&self) -> f64 {
        self.c * self.beta
    }

    pub fn f_inf(&self) -> f64 {
        self.c
    }

    /// Derivative of order `order` (0..=4) of the profile `F1(r) = f(r^2)`.
    pub fn profile_derivative(&self, order: usize, r: f64) -> f64 {
        let (c, b) = (self.c, self.beta);
        let x = b * r * r;
        let g = (-x).exp();
        match order {
            0 => -c * (-x).exp_m1(),
            1 => 2.0 * c * b * r * g,
            2 => 2.0 * c * b * g * (1.0 - 2.0 * x),
            3 => -4.0 * c * b * b * r * g * (3.0 - 2.0 * x),
            4 => -4.0 * c * b * b * g * (3.0 - 12.0 * x + 4.0 * x * x),
            _ => panic!("profile derivative of order {order} is not provided"),
        }
    }

    /// Influence moment `M_d = int_0^1 J(r) r^d dr`.
    pub fn influence_moment(&self) -> f64 {
        self.influence
            .moment(self.dim as i32)
            .expect("M_d is finite for every supported influence function")
    }

    /// `J_bar_1 = (1/omega_d) int_{H_1(0)} J(|xi|)/|xi| dxi = d int_0^1 J(r) r^(d-2) dr`.
    ///
    /// `None` in one dimension, where the integral diverges for every
    /// influence function that does not vanish at the origin.
    pub fn weighted_influence_moment(&self) -> Option<f64> {
        self.influence
            .moment(self.dim as i32 - 2)
            .map(|m| self.dim as f64 * m)
    }

    /// Limiting Lamé constant and energy release rate.
    pub fn limit_constants(&self) -> (f64, f64) {
        let d = self.dim;
        let m_d = self.influence_moment();
        let lambda = lame_factor(d) * self.f_prime_zero() * m_d;
        let g_c = 2.0 * unit_ball_volume(d - 1) / unit_ball_volume(d) * self.f_inf() * m_d;
        (lambda, g_c)
    }
}

/// Inflection point of `r -> f(r^2)`: the root of `f'(r^2) + 2 r^2 f''(r^2) = 0`.
pub fn inflection_point(spec: &PotentialSpec) -> f64 {
    (2.0 * spec.beta).sqrt().recip()
}

/// Strain at which the force of a bond of length `bond_length` peaks.
pub fn critical_strain(r_bar: f64, bond_length: f64) -> Result<f64> {
    if !(bond_length > 0.0) {
        return Err(Error::domain(format!(
            "bond length must be positive, got {bond_length}"
        )));
    }
    Ok(r_bar / bond_length.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub f_prime_0: f64,
    pub f_inf: f64,
    pub c: f64,
    pub beta: f64,
}

/// Inverts `lambda = C_d f'(0) M_d` and `G_c = (2 omega_{d-1}/omega_d) f_inf M_d`.
pub fn calibrate(lambda: f64, g_c: f64, d: usize, influence: InfluenceKind) -> Result<Calibration> {
    if !(lambda > 0.0) || !(g_c > 0.0) {
        return Err(Error::Calibration(format!(
            "lambda and g_c must be positive (got {lambda}, {g_c})"
        )));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::Calibration(format!("unsupported dimension {d}")));
    }
    let m_d = influence
        .moment(d as i32)
        .filter(|m| *m > 0.0)
        .ok_or_else(|| Error::Calibration("influence moment M_d vanishes".into()))?;
    let f_prime_0 = lambda / (lame_factor(d) * m_d);
    let f_inf = g_c * unit_ball_volume(d) / (2.0 * unit_ball_volume(d - 1) * m_d);
    Ok(Calibration {
        f_prime_0,
        f_inf,
        c: f_inf,
        beta: f_prime_0 / f_inf,
    })
}

/// Constants derived from a potential.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants {
    pub f_prime_0: f64,
    pub f_inf: f64,
    pub r_bar: f64,
    pub m_d: f64,
    pub j_bar_1: Option<f64>,
    /// Suprema of `|F1'|, |F1''|, |F1'''|, |F1''''|`.
    pub sup: [f64; 4],
    /// `4 C2 J_bar_1`; `None` when `J_bar_1` diverges.
    pub l1: Option<f64>,
    pub lambda: f64,
    pub g_c: f64,
}

impl DerivedConstants {
    pub fn c1(&self) -> f64 {
        self.sup[0]
    }
    pub fn c2(&self) -> f64 {
        self.sup[1]
    }
    pub fn c3(&self) -> f64 {
        self.sup[2]
    }
    pub fn c4(&self) -> f64 {
        self.sup[3]
    }
}

pub const DEFAULT_SUPREMUM_GRID: usize = 1_000_000;

/// Numerical supremum of `|F1^(order)|` on `[0, 50/sqrt(beta)]`.
///
/// Scans a log-spaced grid (plus the origin) and polishes the best bracket
/// with a golden-section search.
pub fn profile_supremum(spec: &PotentialSpec, order: usize, grid_points: usize) -> f64 {
    let r_max = 50.0 / spec.beta.sqrt();
    let n = grid_points.max(16);
    let log_lo = (1e-12_f64).ln();
    let abs_at = |r: f64| spec.profile_derivative(order, r).abs();

    let node = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else {
            let t = (i - 1) as f64 / (n - 2) as f64;
            r_max * (log_lo * (1.0 - t)).exp()
        }
    };

    let mut best_i = 0;
    let mut best = abs_at(0.0);
    for i in 1..n {
        let v = abs_at(node(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }

    let lo = node(best_i.saturating_sub(1));
    let hi = node((best_i + 1).min(n - 1));
    best.max(golden_section_max(abs_at, lo, hi, 200))
}

fn golden_section_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..iters {
        if (b - a).abs() <= f64::EPSILON * b.abs().max(1e-300) {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = g(x1);
        }
    }
    g1.max(g2).max(g(a)).max(g(b))
}

/// Computes every derived constant of `spec`.
pub fn potential_constants(spec: &PotentialSpec) -> DerivedConstants {
    potential_constants_with_grid(spec, DEFAULT_SUPREMUM_GRID)
}

pub fn potential_constants_with_grid(spec: &PotentialSpec, grid_points: usize) -> DerivedConstants {
    let sup = [1, 2, 3, 4].map(|k| profile_supremum(spec, k, grid_points));
    let j_bar_1 = spec.weighted_influence_moment();
    let (lambda, g_c) = spec.limit_constants();
    DerivedConstants {
        f_prime_0: spec.f_prime_zero(),
        f_inf: spec.f_inf(),
        r_bar: inflection_point(spec),
        m_d: spec.influence_moment(),
        j_bar_1,
        sup,
        l1: j_bar_1.map(|j| 4.0 * sup[1] * j),
        lambda,
        g_c,
    }
}
