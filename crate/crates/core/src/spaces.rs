//! Global degrees of freedom for the lowest-order weak Galerkin spaces.
//!
//! The system unknowns are laid out in contiguous blocks:
//!
//! ```text
//! [ lambda_0 | lambda_b | q_0 | q_b | u | s_0 | s_b | mu ]
//! ```
//!
//! `lambda` lives on every cell and every face. `q_b` carries two tangential
//! coefficients (in the face frame) on interior faces only. `s_b` is zero on
//! the exterior boundary component and shares one constant per interior
//! boundary component. `mu` is the scalar multiplier enforcing
//! `sum_T |T| lambda_0 = 0`; it is counted in the `lambda` block.
//!
//! Element-local vectors use the 24-entry layout given by the `LOCAL_*`
//! constants.

use crate::mesh::Mesh;

pub const LOCAL_LAMBDA0: usize = 0;
pub const LOCAL_LAMBDAB: usize = 1;
pub const LOCAL_Q0: usize = 5;
pub const LOCAL_QB: usize = 8;
pub const LOCAL_U: usize = 16;
pub const LOCAL_S0: usize = 19;
pub const LOCAL_SB: usize = 20;
pub const LOCAL_DIM: usize = 24;

/// How a face-valued unknown is represented globally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceResolution {
    Free,
    Zeroed,
    /// Shared with every face of the given boundary component.
    Tied(usize),
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    /// `(face, s_b resolution, q_b resolution)` for every face.
    pub entries: Vec<(usize, FaceResolution, FaceResolution)>,
    /// Coefficients `|T|` of the mean-zero row for `lambda_0`.
    pub mean_zero: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub num_elements: usize,
    pub num_faces: usize,
    pub num_interior_faces: usize,
    /// Boundary components beyond the exterior one.
    pub num_cavities: usize,
    pub lambda_cell: Block,
    pub lambda_face: Block,
    pub q_cell: Block,
    pub q_face: Block,
    pub u: Block,
    pub s_cell: Block,
    pub s_face: Block,
    pub multiplier: usize,
    q_face_base: Vec<Option<usize>>,
    s_face_slot: Vec<Option<usize>>,
    pub constraints: ConstraintSet,
}

pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    let ne = mesh.num_elements();
    let nf = mesh.num_faces();
    let num_cavities = mesh.num_components.saturating_sub(1);

    let mut q_face_base = vec![None; nf];
    let mut interior = 0;
    for (f, face) in mesh.faces.iter().enumerate() {
        if !face.is_boundary() {
            q_face_base[f] = Some(interior);
            interior += 1;
        }
    }

    let lambda_cell = Block { offset: 0, len: ne };
    let lambda_face = Block { offset: lambda_cell.offset + ne, len: nf };
    let q_cell = Block { offset: lambda_face.offset + nf, len: 3 * ne };
    let q_face = Block { offset: q_cell.offset + 3 * ne, len: 2 * interior };
    let u = Block { offset: q_face.offset + 2 * interior, len: 3 * ne };
    let s_cell = Block { offset: u.offset + 3 * ne, len: ne };
    let s_face = Block { offset: s_cell.offset + ne, len: interior + num_cavities };
    let multiplier = s_face.offset + s_face.len;

    let mut entries = Vec::with_capacity(nf);
    let mut s_face_slot = vec![None; nf];
    for (f, face) in mesh.faces.iter().enumerate() {
        let (s_res, q_res) = match face.boundary {
            None => {
                s_face_slot[f] = Some(s_face.offset + q_face_base[f].unwrap());
                (FaceResolution::Free, FaceResolution::Free)
            }
            Some(0) => (FaceResolution::Zeroed, FaceResolution::Zeroed),
            Some(c) => {
                s_face_slot[f] = Some(s_face.offset + interior + c - 1);
                (FaceResolution::Tied(c), FaceResolution::Zeroed)
            }
        };
        entries.push((f, s_res, q_res));
    }
    for base in q_face_base.iter_mut().flatten() {
        *base = q_face.offset + 2 * *base;
    }

    let constraints = ConstraintSet { entries, mean_zero: mesh.elements.iter().map(|e| e.volume).collect() };
    DofMap {
        num_elements: ne,
        num_faces: nf,
        num_interior_faces: interior,
        num_cavities,
        lambda_cell,
        lambda_face,
        q_cell,
        q_face,
        u,
        s_cell,
        s_face,
        multiplier,
        q_face_base,
        s_face_slot,
        constraints,
    }
}

impl DofMap {
    pub fn dim(&self) -> usize {
        self.multiplier + 1
    }

    pub fn dim_lambda(&self) -> usize {
        self.lambda_cell.len + self.lambda_face.len + 1
    }

    pub fn dim_q(&self) -> usize {
        self.q_cell.len + self.q_face.len
    }

    pub fn dim_u(&self) -> usize {
        self.u.len
    }

    pub fn dim_s(&self) -> usize {
        self.s_cell.len + self.s_face.len
    }

    pub fn lambda_face_dof(&self, f: usize) -> usize {
        self.lambda_face.offset + f
    }

    /// First of the two tangential `q_b` coefficients, `None` on the boundary.
    pub fn q_face_dofs(&self, f: usize) -> Option<usize> {
        self.q_face_base[f]
    }

    /// Global `s_b` index, `None` where `s_b` is fixed to zero.
    pub fn s_face_dof(&self, f: usize) -> Option<usize> {
        self.s_face_slot[f]
    }

    /// Shared `s_b` index of interior boundary component `c >= 1`.
    pub fn cavity_dof(&self, c: usize) -> usize {
        assert!(c >= 1 && c <= self.num_cavities, "component {c} has no free constant");
        self.s_face.offset + self.num_interior_faces + c - 1
    }

    /// Global index of every element-local unknown; `None` for zeroed ones.
    pub fn element_dofs(&self, mesh: &Mesh, t: usize) -> [Option<usize>; LOCAL_DIM] {
        let e = &mesh.elements[t];
        let mut out = [None; LOCAL_DIM];
        out[LOCAL_LAMBDA0] = Some(self.lambda_cell.offset + t);
        for k in 0..3 {
            out[LOCAL_Q0 + k] = Some(self.q_cell.offset + 3 * t + k);
            out[LOCAL_U + k] = Some(self.u.offset + 3 * t + k);
        }
        out[LOCAL_S0] = Some(self.s_cell.offset + t);
        for (i, &f) in e.faces.iter().enumerate() {
            out[LOCAL_LAMBDAB + i] = Some(self.lambda_face_dof(f));
            if let Some(b) = self.q_face_base[f] {
                out[LOCAL_QB + 2 * i] = Some(b);
                out[LOCAL_QB + 2 * i + 1] = Some(b + 1);
            }
            out[LOCAL_SB + i] = self.s_face_slot[f];
        }
        out
    }

    /// Maps an element-local vector to global `(index, value)` pairs,
    /// dropping zeroed unknowns and redirecting tied ones.
    pub fn scatter(&self, mesh: &Mesh, t: usize, local: &[f64; LOCAL_DIM]) -> Vec<(usize, f64)> {
        let dofs = self.element_dofs(mesh, t);
        dofs.iter().zip(local).filter_map(|(d, &v)| d.map(|g| (g, v))).collect()
    }

    /// Element-local view of a global vector; zeroed unknowns read as 0.
    pub fn gather(&self, mesh: &Mesh, t: usize, global: &[f64]) -> [f64; LOCAL_DIM] {
        let dofs = self.element_dofs(mesh, t);
        dofs.map(|d| d.map_or(0.0, |g| global[g]))
    }
}
