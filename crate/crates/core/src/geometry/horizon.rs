use super::Point;
use crate::error::{Error, Result};
use crate::potential::InfluenceKind;

/// One lattice bond of the unit-ball quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    /// Offset in the unit ball.
    pub xi: Point,
    /// `|xi|`.
    pub len: f64,
    /// `xi / |xi|`.
    pub dir: Point,
    /// Unit-ball volume represented by the bond.
    pub weight: f64,
    /// Influence value `J(|xi|)`.
    pub j: f64,
}

/// Quadrature rule for integrals over the horizon ball `H_eps(x)`, stored in
/// unit-ball coordinates `y = x + eps * xi`.
#[derive(Clone, Debug)]
pub struct HorizonTable {
    epsilon: f64,
    m: usize,
    dim: usize,
    influence: InfluenceKind,
    bonds: Vec<Bond>,
}

impl HorizonTable {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn influence(&self) -> InfluenceKind {
        self.influence
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.bonds.iter().map(|b| b.weight).sum()
    }

    /// Same rule with each lattice cell refined `factor` times.
    pub fn refined(&self, factor: usize) -> Result<HorizonTable> {
        build_horizon_quadrature(self.epsilon, self.m * factor, self.influence, self.dim)
    }
}

/// Lattice refinement giving a lattice spacing `eps / m` of about `h / 2`.
pub fn default_lattice_refinement(epsilon: f64, h: f64) -> usize {
    ((2.0 * epsilon / h).round() as usize).max(2)
}

/// Partial-volume Cartesian lattice over `[-1, 1]^d` with spacing `1 / m`.
pub fn build_horizon_quadrature(
    epsilon: f64,
    m: usize,
    influence: InfluenceKind,
    dim: usize,
) -> Result<HorizonTable> {
    if m < 2 {
        return Err(Error::domain(format!("lattice refinement must be at least 2, got {m}")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("horizon must be positive, got {epsilon}")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::domain(format!("horizon tables support d = 1, 2, got {dim}")));
    }
    const SUB: usize = 4;
    let a = 1.0 / m as f64;
    let cell_volume = a.powi(dim as i32);
    let n = 2 * m;
    let center = |k: usize| -1.0 + (k as f64 + 0.5) * a;
    let ny = if dim == 2 { n } else { 1 };

    let mut bonds = Vec::new();
    for j in 0..ny {
        for i in 0..n {
            let c = [center(i), if dim == 2 { center(j) } else { 0.0 }];
            let half = 0.5 * a;
            let mut far = 0.0;
            let mut near = 0.0;
            for ax in 0..dim {
                let v = c[ax].abs();
                far += (v + half).powi(2);
                near += (v - half).max(0.0).powi(2);
            }
            if near >= 1.0 {
                continue;
            }
            let (xi, weight) = if far <= 1.0 {
                (c, cell_volume)
            } else {
                let subs = SUB.pow(dim as u32);
                let mut inside = 0usize;
                let mut acc = [0.0; 2];
                let off = |k: usize| -half + (k as f64 + 0.5) * a / SUB as f64;
                for sj in 0..(if dim == 2 { SUB } else { 1 }) {
                    for si in 0..SUB {
                        let p = [c[0] + off(si), if dim == 2 { c[1] + off(sj) } else { 0.0 }];
                        if p[0] * p[0] + p[1] * p[1] < 1.0 {
                            inside += 1;
                            acc[0] += p[0];
                            acc[1] += p[1];
                        }
                    }
                }
                if inside == 0 {
                    continue;
                }
                let frac = inside as f64 / subs as f64;
                let xi = if c[0] * c[0] + c[1] * c[1] < 1.0 {
                    c
                } else {
                    [acc[0] / inside as f64, acc[1] / inside as f64]
                };
                (xi, frac * cell_volume)
            };
            let len = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            bonds.push(Bond {
                xi,
                len,
                dir: [xi[0] / len, xi[1] / len],
                weight,
                j: influence.eval(len),
            });
        }
    }
    Ok(HorizonTable {
        epsilon,
        m,
        dim,
        influence,
        bonds,
    })
}
