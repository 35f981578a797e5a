use std::fmt::Write as _;
use std::path::Path;

use super::Point;
use crate::error::{Error, Result};

const LOCATE_TOL: f64 = 1e-12;

/// Axis-aligned box `[lo_0, hi_0] x [lo_1, hi_1]` (first axis only in 1D).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    dim: usize,
    lo: Point,
    hi: Point,
}

impl BoxDomain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        if !(1..=2).contains(&dim) || hi.len() != dim {
            return Err(Error::Mesh(format!(
                "box must have matching 1D or 2D bounds, got {lo:?} / {hi:?}"
            )));
        }
        let mut b = BoxDomain {
            dim,
            lo: [0.0; 2],
            hi: [0.0; 2],
        };
        for a in 0..dim {
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(Error::Mesh(format!("degenerate box along axis {a}")));
            }
            b.lo[a] = lo[a];
            b.hi[a] = hi[a];
        }
        Ok(b)
    }

    pub fn unit(dim: usize) -> Self {
        let ones = [1.0; 2];
        let zeros = [0.0; 2];
        BoxDomain::new(&zeros[..dim], &ones[..dim]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).product()
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    #[inline]
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.dim {
            d = d.min(x[a] - self.lo[a]).min(self.hi[a] - x[a]);
        }
        d
    }

    #[inline]
    pub fn contains(&self, x: Point, tol: f64) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] - tol && x[a] <= self.hi[a] + tol)
    }

    pub fn on_boundary(&self, x: Point, tol: f64) -> bool {
        self.contains(x, tol) && self.distance_to_boundary(x).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Grid {
    counts: [usize; 2],
    spacing: [f64; 2],
}

/// Containing element and barycentric coordinates of a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub element: usize,
    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub bary: [f64; 3],
}

/// Conforming simplex mesh of a box (segments in 1D, triangles in 2D).
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    /// Flattened connectivity, `dim + 1` node indices per element.
    elements: Vec<usize>,
    boundary: Vec<bool>,
    h: f64,
    domain: BoxDomain,
    grid: Option<Grid>,
}

/// Structured mesh of `domain` whose grid spacing does not exceed `h` on
/// either axis. In 2D every grid cell is split into two triangles along the
/// diagonal through its lower-left and upper-right corners.
pub fn build_uniform_mesh(domain: &BoxDomain, h: f64) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Mesh(format!("mesh size must be positive, got {h}")));
    }
    let dim = domain.dim();
    let mut counts = [1usize; 2];
    let mut spacing = [0.0; 2];
    for a in 0..dim {
        let len = domain.extent(a);
        if h > len * (1.0 + 1e-12) {
            return Err(Error::Mesh(format!(
                "mesh size {h} exceeds box extent {len} along axis {a}"
            )));
        }
        counts[a] = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        spacing[a] = len / counts[a] as f64;
    }
    let lo = domain.lo();

    let mut nodes = Vec::new();
    let mut boundary = Vec::new();
    let mut elements = Vec::new();
    match dim {
        1 => {
            let nx = counts[0];
            for i in 0..=nx {
                nodes.push([lo[0] + i as f64 * spacing[0], 0.0]);
                boundary.push(i == 0 || i == nx);
            }
            for i in 0..nx {
                elements.extend_from_slice(&[i, i + 1]);
            }
        }
        _ => {
            let (nx, ny) = (counts[0], counts[1]);
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push([
                        lo[0] + i as f64 * spacing[0],
                        lo[1] + j as f64 * spacing[1],
                    ]);
                    boundary.push(i == 0 || i == nx || j == 0 || j == ny);
                }
            }
            let id = |i: usize, j: usize| i + j * (nx + 1);
            for j in 0..ny {
                for i in 0..nx {
                    let (n00, n10, n11, n01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                    elements.extend_from_slice(&[n00, n10, n11]);
                    elements.extend_from_slice(&[n00, n11, n01]);
                }
            }
        }
    }
    let mut mesh = Mesh {
        dim,
        nodes,
        elements,
        boundary,
        h: 0.0,
        domain: *domain,
        grid: Some(Grid { counts, spacing }),
    };
    mesh.h = mesh.max_diameter();
    Ok(mesh)
}

impl Mesh {
    /// Assembles a mesh from raw arrays, validating element measures.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<Point>,
        elements: Vec<usize>,
        boundary_nodes: &[usize],
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Mesh(format!("unsupported mesh dimension {dim}")));
        }
        if nodes.is_empty() || elements.is_empty() || elements.len() % (dim + 1) != 0 {
            return Err(Error::Mesh("empty mesh or ragged connectivity".into()));
        }
        if let Some(&bad) = elements.iter().find(|&&n| n >= nodes.len()) {
            return Err(Error::Mesh(format!("element references missing node {bad}")));
        }
        let mut boundary = vec![false; nodes.len()];
        for &b in boundary_nodes {
            *boundary
                .get_mut(b)
                .ok_or_else(|| Error::Mesh(format!("boundary node {b} out of range")))? = true;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &nodes {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let domain = BoxDomain::new(&lo[..dim], &hi[..dim])?;
        let mut mesh = Mesh {
            dim,
            nodes,
            elements,
            boundary,
            h: 0.0,
            domain,
            grid: None,
        };
        for e in 0..mesh.n_elements() {
            if !(mesh.element_measure(e) > 0.0) {
                return Err(Error::Mesh(format!("element {e} is degenerate")));
            }
        }
        mesh.h = mesh.max_diameter();
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len() * self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    #[inline]
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    #[inline]
    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// Degree-of-freedom mask: `true` for constrained (boundary) entries.
    pub fn constrained_dofs(&self) -> Vec<bool> {
        let d = self.dim;
        (0..self.n_dofs()).map(|k| self.boundary[k / d]).collect()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing of structured meshes (`h` otherwise).
    pub fn spacing(&self) -> f64 {
        match self.grid {
            Some(g) => g.spacing[..self.dim].iter().cloned().fold(0.0, f64::max),
            None => self.h,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn is_structured(&self) -> bool {
        self.grid.is_some()
    }

    /// Length (1D) or area (2D) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = self.element(e);
        match self.dim {
            1 => (self.nodes[el[1]][0] - self.nodes[el[0]][0]).abs(),
            _ => {
                let (a, b, c) = (self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
            }
        }
    }

    fn max_diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for e in 0..self.n_elements() {
            let el = self.element(e);
            for i in 0..el.len() {
                for j in i + 1..el.len() {
                    let (p, q) = (self.nodes[el[i]], self.nodes[el[j]]);
                    h = h.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
                }
            }
        }
        h
    }

    /// Physical point with barycentric coordinates `bary` in element `e`.
    #[inline]
    pub fn point_in_element(&self, e: usize, bary: &[f64; 3]) -> Point {
        let el = self.element(e);
        let mut x = [0.0; 2];
        for (k, &n) in el.iter().enumerate() {
            x[0] += bary[k] * self.nodes[n][0];
            x[1] += bary[k] * self.nodes[n][1];
        }
        x
    }

    /// Finds an element containing `x`. Returns `None` outside the domain.
    #[inline]
    pub fn locate(&self, x: Point) -> Option<Location> {
        if !self.domain.contains(x, LOCATE_TOL) {
            return None;
        }
        match self.grid {
            Some(g) => Some(self.locate_structured(&g, x)),
            None => self.locate_scan(x),
        }
    }

    #[inline]
    fn locate_structured(&self, g: &Grid, x: Point) -> Location {
        let lo = self.domain.lo();
        let cell = |a: usize| -> (usize, f64) {
            let t = (x[a] - lo[a]) / g.spacing[a];
            let i = (t.floor().max(0.0) as usize).min(g.counts[a] - 1);
            (i, (t - i as f64).clamp(0.0, 1.0))
        };
        let (i, s) = cell(0);
        if self.dim == 1 {
            return Location {
                element: i,
                bary: [1.0 - s, s, 0.0],
            };
        }
        let (j, t) = cell(1);
        let base = 2 * (i + j * g.counts[0]);
        if s >= t {
            Location {
                element: base,
                bary: [1.0 - s, s - t, t],
            }
        } else {
            Location {
                element: base + 1,
                bary: [1.0 - t, s, t - s],
            }
        }
    }

    /// Linear scan fallback for meshes without grid structure.
    fn locate_scan(&self, x: Point) -> Option<Location> {
        for e in 0..self.n_elements() {
            let el = self.element(e);
            let bary = match self.dim {
                1 => {
                    let (a, b) = (self.nodes[el[0]][0], self.nodes[el[1]][0]);
                    let s = (x[0] - a) / (b - a);
                    [1.0 - s, s, 0.0]
                }
                _ => {
                    let (a, b, c) = (self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
                    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
                    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
                    [1.0 - l1 - l2, l1, l2]
                }
            };
            if bary[..=self.dim].iter().all(|&l| l >= -1e-10) {
                return Some(Location { element: e, bary });
            }
        }
        None
    }

    /// Serializes to the `pdm` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pdm {} {} {}", self.dim, self.n_nodes(), self.n_elements());
        for p in &self.nodes {
            let coords: Vec<String> = p[..self.dim].iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", coords.join(" "));
        }
        for e in 0..self.n_elements() {
            let ids: Vec<String> = self.element(e).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", ids.join(" "));
        }
        let b: Vec<String> = self.boundary_nodes().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", b.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::Mesh(format!("line {}: {msg}", line + 1));

        let (ln, header) = lines.next().ok_or_else(|| Error::Mesh("empty mesh file".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 || head[0] != "pdm" {
            return Err(bad(ln, "expected `pdm <d> <n_nodes> <n_elems>`"));
        }
        let parse_usize = |s: &str, line: usize| s.parse::<usize>().map_err(|_| bad(line, "bad integer"));
        let dim = parse_usize(head[1], ln)?;
        let n_nodes = parse_usize(head[2], ln)?;
        let n_elems = parse_usize(head[3], ln)?;
        if !(1..=2).contains(&dim) {
            return Err(bad(ln, "dimension must be 1 or 2"));
        }

        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (ln, l) = lines.next().ok_or_else(|| Error::Mesh("truncated node block".into()))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(ln, "bad coordinate")))
                .collect::<Result<_>>()?;
            if v.len() != dim {
                return Err(bad(ln, "wrong coordinate count"));
            }
            nodes.push([v[0], if dim == 2 { v[1] } else { 0.0 }]);
        }
        let mut elements = Vec::with_capacity(n_elems * (dim + 1));
        for _ in 0..n_elems {
            let (ln, l) = lines.next().ok_or_else(|| Error::Mesh("truncated element block".into()))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| parse_usize(t, ln))
                .collect::<Result<_>>()?;
            if v.len() != dim + 1 {
                return Err(bad(ln, "wrong vertex count"));
            }
            elements.extend(v);
        }
        let boundary: Vec<usize> = match lines.next() {
            Some((ln, l)) => l
                .split_whitespace()
                .map(|t| parse_usize(t, ln))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        Mesh::from_parts(dim, nodes, elements, &boundary)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }
}
