//! CSV and key=value artifacts, written through a temporary file and an
//! atomic rename. Doubles use the shortest representation that parses back
//! to the same value.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::dynamics::{EnergyRow, SimState};
use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Buffered writer that only appears at its final path after [`finish`].
///
/// [`finish`]: AtomicFile::finish
pub struct AtomicFile {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
}

impl AtomicFile {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let name = path
            .file_name()
            .ok_or_else(|| Error::domain(format!("not a file path: {}", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
        let out = BufWriter::new(File::create(&tmp)?);
        Ok(AtomicFile {
            path: path.to_path_buf(),
            tmp,
            out,
        })
    }

    pub fn write_line(&mut self, line: &str) -> Result<()> {
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        drop(file);
        fs::rename(&self.tmp, &self.path)?;
        Ok(())
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut f = AtomicFile::create(path)?;
    f.out.write_all(contents.as_bytes())?;
    f.finish()
}

/// Shortest round-trip decimal form of `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Ordered `key = value` block.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn set_num(&mut self, key: &str, value: f64) {
        self.set(key, num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let mut s = Summary::new();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                s.set(k.trim(), v.trim());
            }
        }
        s
    }
}

pub fn snapshot_header(dim: usize) -> &'static str {
    if dim == 1 {
        "step,time,node,x0,u0,v0"
    } else {
        "step,time,node,x0,x1,u0,u1,v0,v1"
    }
}

/// One snapshot row per node.
pub fn snapshot_rows(mesh: &Mesh, state: &SimState) -> Vec<String> {
    let d = mesh.dim();
    (0..mesh.n_nodes())
        .map(|i| {
            let x = mesh.node(i);
            let mut cols = vec![state.k.to_string(), num(state.t), i.to_string()];
            cols.extend((0..d).map(|c| num(x[c])));
            cols.extend((0..d).map(|c| num(state.u_curr[i * d + c])));
            cols.extend((0..d).map(|c| num(state.v_curr[i * d + c])));
            cols.join(",")
        })
        .collect()
}

pub const ENERGY_HEADER: &str = "step,time,kinetic,potential,total,work_bound";

pub fn energy_row(r: &EnergyRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.step,
        num(r.time),
        num(r.kinetic),
        num(r.potential),
        num(r.total),
        num(r.work_bound)
    )
}

/// Nodal displacement and velocity vectors from the last step of a snapshot
/// CSV written for a mesh with `n_nodes` nodes in `dim` dimensions.
pub fn read_snapshot(path: &Path, dim: usize, n_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, msg: &str| Error::config(line, format!("{}: {msg}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == snapshot_header(dim) => {}
        _ => return Err(bad(1, "unexpected snapshot header")),
    }
    let mut last_step = None;
    let mut u = vec![f64::NAN; n_nodes * dim];
    let mut v = vec![f64::NAN; n_nodes * dim];
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 + 3 * dim {
            return Err(bad(idx + 1, "wrong number of columns"));
        }
        let step: usize = cols[0].parse().map_err(|_| bad(idx + 1, "bad step"))?;
        let node: usize = cols[2].parse().map_err(|_| bad(idx + 1, "bad node index"))?;
        if node >= n_nodes {
            return Err(bad(idx + 1, "node index outside the mesh"));
        }
        if last_step != Some(step) {
            last_step = Some(step);
            u.fill(f64::NAN);
            v.fill(f64::NAN);
        }
        for c in 0..dim {
            let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(idx + 1, "bad value"));
            u[node * dim + c] = parse(cols[3 + dim + c])?;
            v[node * dim + c] = parse(cols[3 + 2 * dim + c])?;
        }
    }
    if u.iter().chain(&v).any(|x| x.is_nan()) {
        return Err(bad(0, "snapshot does not cover every node"));
    }
    Ok((u, v))
}
