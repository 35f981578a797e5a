use std::f64::consts::PI;

use crate::geometry::{BoxDomain, Point};

/// Time factor `g(t)` of a separable displacement `u(t, x) = g(t) X(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeFactor {
    /// `amp * cos(omega t)`.
    Cosine { amp: f64, omega: f64 },
    /// `sum_k c_k t^k`.
    Polynomial(Vec<f64>),
}

impl TimeFactor {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeFactor::Cosine { amp, omega } => amp * (omega * t).cos(),
            TimeFactor::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
        }
    }

    pub fn first(&self, t: f64) -> f64 {
        match self {
            TimeFactor::Cosine { amp, omega } => -amp * omega * (omega * t).sin(),
            TimeFactor::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * t + k as f64 * ck),
        }
    }

    pub fn second(&self, t: f64) -> f64 {
        match self {
            TimeFactor::Cosine { amp, omega } => -amp * omega * omega * (omega * t).cos(),
            TimeFactor::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * t + (k * (k - 1)) as f64 * ck),
        }
    }

    /// Upper bound of `g(t)^2` on `[0, t_final]`.
    pub fn max_square(&self, t_final: f64) -> f64 {
        match self {
            TimeFactor::Cosine { amp, .. } => amp * amp,
            TimeFactor::Polynomial(_) => (0..=1000)
                .map(|i| self.value(t_final * i as f64 / 1000.0).powi(2))
                .fold(0.0, f64::max)
                * 1.01,
        }
    }
}

/// Spatial profile `X(x)`, zero on the boundary of the unit box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpatialProfile {
    /// `sin(pi x)` on `[0, 1]`.
    Sine1d,
    /// `sin(pi x) sin(pi y) (1, 1) / sqrt(2)` on `[0, 1]^2`.
    Sine2d,
}

impl SpatialProfile {
    pub fn dim(self) -> usize {
        match self {
            SpatialProfile::Sine1d => 1,
            SpatialProfile::Sine2d => 2,
        }
    }

    /// Profile value, extended by zero outside the unit box.
    #[inline]
    pub fn eval(self, x: Point) -> Point {
        match self {
            SpatialProfile::Sine1d => {
                if !(0.0..=1.0).contains(&x[0]) {
                    return [0.0; 2];
                }
                [(PI * x[0]).sin(), 0.0]
            }
            SpatialProfile::Sine2d => {
                if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
                    return [0.0; 2];
                }
                let v = (PI * x[0]).sin() * (PI * x[1]).sin() * std::f64::consts::FRAC_1_SQRT_2;
                [v, v]
            }
        }
    }

    /// `||X||_{L2}`.
    pub fn l2_norm(self) -> f64 {
        match self {
            SpatialProfile::Sine1d => 0.5f64.sqrt(),
            // each component has squared norm 1/8
            SpatialProfile::Sine2d => 0.5,
        }
    }

    /// `||X||_{H2}` including all derivatives up to order two.
    pub fn h2_norm(self) -> f64 {
        let p2 = PI * PI;
        match self {
            SpatialProfile::Sine1d => (0.5 * (1.0 + p2 + p2 * p2)).sqrt(),
            // per component: (1 + 2 pi^2 + 3 pi^4) / 8, two components
            SpatialProfile::Sine2d => ((1.0 + 2.0 * p2 + 3.0 * p2 * p2) / 4.0).sqrt(),
        }
    }
}

/// Separable manufactured displacement `u(t, x) = g(t) X(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub time: TimeFactor,
    pub profile: SpatialProfile,
}

impl ManufacturedCase {
    pub fn sine_1d(amp: f64, omega: f64) -> Self {
        ManufacturedCase {
            time: TimeFactor::Cosine { amp, omega },
            profile: SpatialProfile::Sine1d,
        }
    }

    pub fn sine_2d(amp: f64, omega: f64) -> Self {
        ManufacturedCase {
            time: TimeFactor::Cosine { amp, omega },
            profile: SpatialProfile::Sine2d,
        }
    }

    /// Reference case by name: `sine1d` or `sine2d` (amplitude 0.05,
    /// angular frequency 1).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sine1d" => Some(Self::sine_1d(0.05, 1.0)),
            "sine2d" => Some(Self::sine_2d(0.05, 1.0)),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::unit(self.dim())
    }

    fn scaled(&self, g: f64, x: Point) -> Point {
        let p = self.profile.eval(x);
        [g * p[0], g * p[1]]
    }

    pub fn u(&self, t: f64, x: Point) -> Point {
        self.scaled(self.time.value(t), x)
    }

    pub fn v(&self, t: f64, x: Point) -> Point {
        self.scaled(self.time.first(t), x)
    }

    pub fn a(&self, t: f64, x: Point) -> Point {
        self.scaled(self.time.second(t), x)
    }

    fn sup_over_time(&self, t_final: f64, f: impl Fn(f64) -> f64) -> f64 {
        (0..=1000)
            .map(|i| f(t_final * i as f64 / 1000.0).abs())
            .fold(0.0, f64::max)
    }

    /// `sup_t ||d^2 u / dt^2||` on `[0, t_final]`.
    pub fn sup_utt_norm(&self, t_final: f64) -> f64 {
        self.sup_over_time(t_final, |t| self.time.second(t)) * self.profile.l2_norm()
    }

    /// `sup_t ||u||_{H2}` on `[0, t_final]`.
    pub fn sup_h2_norm(&self, t_final: f64) -> f64 {
        self.sup_over_time(t_final, |t| self.time.value(t)) * self.profile.h2_norm()
    }
}
