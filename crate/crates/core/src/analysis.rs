//! Error norms, convergence rates, tables and VTK export.
//!
//! # VTK layout
//!
//! [`export_field`] writes a legacy ASCII unstructured grid, one line per
//! record, numbers in Rust `{:.17e}` form so they parse back exactly:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET UNSTRUCTURED_GRID
//! POINTS <nv> double
//! <x> <y> <z>                      (nv lines)
//! CELLS <ne> <5 ne>
//! 4 <v0> <v1> <v2> <v3>            (ne lines)
//! CELL_TYPES <ne>
//! 10                               (ne lines)
//! CELL_DATA <ne>
//! VECTORS <name> double
//! <vx> <vy> <vz>                   (ne lines)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::assembly::{s1_energy, s2_energy, PdwgParams};
use crate::mesh::Mesh;
use crate::spaces::DofMap;
use crate::weakcalc::{project_cell_vec, Quadrature};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub inv_h: usize,
    /// `||eps^(1/q) (u - u_h)||_{L^q}`
    pub e_u: f64,
    /// `||eps^(1/q) (Q_h u - u_h)||_{L^q}`
    pub eta_u: f64,
    /// `|||(e_lambda, e_q)|||`
    pub dual: f64,
    /// `|||s_h|||`
    pub s_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `log2(e_coarse / e_fine)`.
pub fn rate(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    pub p: f64,
    pub records: Vec<ErrorRecord>,
}

/// Columns reported with rates.
pub const COLUMNS: [&str; 4] = ["e_u", "eta_u", "dual", "s_norm"];

impl RateTable {
    pub fn new(p: f64) -> Self {
        Self { p, records: Vec::new() }
    }

    /// Appends a record; refinements must increase.
    pub fn push(&mut self, record: ErrorRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.inv_h <= last.inv_h {
                return Err(Error::InvalidInput(format!("1/h = {} does not refine {}", record.inv_h, last.inv_h)));
            }
        }
        self.records.push(record);
        Ok(())
    }

    fn values(r: &ErrorRecord) -> [f64; 4] {
        [r.e_u, r.eta_u, r.dual, r.s_norm]
    }

    /// Rates between consecutive rows, `[e_u, eta_u, dual, s_norm]`.
    pub fn rates(&self) -> Vec<[f64; 4]> {
        self.records
            .windows(2)
            .map(|w| {
                let (a, b) = (Self::values(&w[0]), Self::values(&w[1]));
                std::array::from_fn(|k| rate(a[k], b[k]))
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["p", "inv_h", "e_u", "rate_e_u", "eta_u", "rate_eta_u", "dual", "rate_dual", "s_norm", "rate_s_norm", "iterations", "converged"])
            .map_err(io)?;
        let rates = self.rates();
        for (k, r) in self.records.iter().enumerate() {
            let mut row = vec![format!("{}", self.p), r.inv_h.to_string()];
            for (c, v) in Self::values(r).iter().enumerate() {
                row.push(format!("{v:.6e}"));
                row.push(if k == 0 { String::new() } else { format!("{:.4}", rates[k - 1][c]) });
            }
            row.push(r.iterations.to_string());
            row.push(r.converged.to_string());
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| p | 1/h | e_u | rate | eta_u | rate | dual | rate | s_h | rate | It. |");
        let _ = writeln!(s, "|---|-----|-----|------|-------|------|------|------|-----|------|-----|");
        let rates = self.rates();
        for (k, r) in self.records.iter().enumerate() {
            let _ = write!(s, "| {} | {} ", self.p, r.inv_h);
            for (c, v) in Self::values(r).iter().enumerate() {
                let rt = if k == 0 { "--".to_string() } else { format!("{:.2}", rates[k - 1][c]) };
                let _ = write!(s, "| {v:.2e} | {rt} ");
            }
            let flag = if r.converged { "" } else { "*" };
            let _ = writeln!(s, "| {}{flag} |", r.iterations);
        }
        s
    }
}

fn eps_power(eps: &[f64; 3], q: f64) -> Vec3 {
    Vec3::new(eps[0].powf(1.0 / q), eps[1].powf(1.0 / q), eps[2].powf(1.0 / q))
}

/// `(sum_T int_T |eps^(1/q) (reference - u_h)|^q)^(1/q)` with `u_h`
/// constant per element.
pub fn error_lq(mesh: &Mesh, u_h: &[Vec3], reference: impl Fn(Vec3) -> Vec3, eps: &[f64; 3], q: f64, quad: &Quadrature) -> f64 {
    let w = eps_power(eps, q);
    let mut total = 0.0;
    for (t, uh) in u_h.iter().enumerate() {
        let c = mesh.element_corners(t);
        total += quad.integrate_cell(&c, |x| (reference(x) - uh).component_mul(&w).norm().powf(q));
    }
    total.powf(1.0 / q)
}

/// As [`error_lq`] for a piecewise-constant reference.
pub fn error_lq_cellwise(mesh: &Mesh, u_h: &[Vec3], reference: &[Vec3], eps: &[f64; 3], q: f64) -> f64 {
    let w = eps_power(eps, q);
    let total: f64 = mesh
        .elements
        .iter()
        .zip(u_h.iter().zip(reference))
        .map(|(e, (a, b))| e.volume * (b - a).component_mul(&w).norm().powf(q))
        .sum();
    total.powf(1.0 / q)
}

/// Cell means of a vector field.
pub fn project_cells(mesh: &Mesh, f: impl Fn(Vec3) -> Vec3, quad: &Quadrature) -> Vec<Vec3> {
    (0..mesh.num_elements()).map(|t| project_cell_vec(&f, &mesh.element_corners(t), quad)).collect()
}

/// `s1(lambda_h, q_h; lambda_h, q_h)^(1/p)`, read from a full coefficient vector.
pub fn triple_norm_dual(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], params: &PdwgParams) -> f64 {
    s1_energy(mesh, dofs, coeffs, params).powf(1.0 / params.p)
}

/// `s2(s_h; s_h)^(1/q)`.
pub fn triple_norm_s(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], params: &PdwgParams) -> f64 {
    s2_energy(mesh, dofs, coeffs, params).powf(1.0 / params.q)
}

fn vtk_string(mesh: &Mesh, field: &[Vec3], name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{name}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    let ne = mesh.num_elements();
    let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
    for e in &mesh.elements {
        let [a, b, c, d] = e.vertices;
        let _ = writeln!(s, "4 {a} {b} {c} {d}");
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "10");
    }
    let _ = writeln!(s, "CELL_DATA {ne}");
    let _ = writeln!(s, "VECTORS {name} double");
    for v in field {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    s
}

/// Writes a cellwise vector field as legacy VTK.
pub fn export_field(mesh: &Mesh, field: &[Vec3], name: &str, path: &Path) -> Result<()> {
    if field.len() != mesh.num_elements() {
        return Err(Error::InvalidInput(format!("{} cell values for {} elements", field.len(), mesh.num_elements())));
    }
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::InvalidInput(format!("invalid field name {name:?}")));
    }
    fs::write(path, vtk_string(mesh, field, name))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VtkField {
    pub name: String,
    pub points: Vec<Vec3>,
    pub cells: Vec<[usize; 4]>,
    pub vectors: Vec<Vec3>,
}

/// Reads back a file in the layout written by [`export_field`].
pub fn read_vtk(path: &Path) -> Result<VtkField> {
    let text = fs::read_to_string(path)?;
    let bad = |msg: &str| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let mut next = || lines.next().ok_or_else(|| bad("unexpected end of file"));
    let count = |line: &str, key: &str| -> Result<usize> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(&format!("expected {key}")));
        }
        it.next().and_then(|n| n.parse().ok()).ok_or_else(|| bad(&format!("bad {key} count")))
    };
    let vec3 = |line: &str| -> Result<Vec3> {
        let v: Vec<f64> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("bad number"))?;
        if v.len() != 3 {
            return Err(bad("expected three components"));
        }
        Ok(Vec3::new(v[0], v[1], v[2]))
    };
    if !next()?.starts_with("# vtk DataFile") {
        return Err(bad("missing header"));
    }
    next()?;
    if next()?.trim() != "ASCII" || next()?.trim() != "DATASET UNSTRUCTURED_GRID" {
        return Err(bad("not an ASCII unstructured grid"));
    }
    let np = count(next()?, "POINTS")?;
    let points = (0..np).map(|_| vec3(next()?)).collect::<Result<Vec<_>>>()?;
    let ne = count(next()?, "CELLS")?;
    let mut cells = Vec::with_capacity(ne);
    for _ in 0..ne {
        let v: Vec<usize> = next()?.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("bad cell"))?;
        if v.len() != 5 || v[0] != 4 || v[1..].iter().any(|&i| i >= np) {
            return Err(bad("cells must be tetrahedra"));
        }
        cells.push([v[1], v[2], v[3], v[4]]);
    }
    if count(next()?, "CELL_TYPES")? != ne {
        return Err(bad("cell type count"));
    }
    for _ in 0..ne {
        if next()?.trim() != "10" {
            return Err(bad("cell type must be 10"));
        }
    }
    if count(next()?, "CELL_DATA")? != ne {
        return Err(bad("cell data count"));
    }
    let header = next()?;
    let name = header
        .strip_prefix("VECTORS ")
        .and_then(|r| r.split_whitespace().next())
        .ok_or_else(|| bad("expected VECTORS"))?
        .to_string();
    let vectors = (0..ne).map(|_| vec3(next()?)).collect::<Result<Vec<_>>>()?;
    Ok(VtkField { name, points, cells, vectors })
}
