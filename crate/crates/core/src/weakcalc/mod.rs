//! Element kernels for the lowest-order weak Galerkin spaces.
//!
//! With piecewise-constant test functions the volume terms of the weak
//! gradient and weak curl vanish and both operators reduce to face sums:
//!
//! ```text
//!   grad_w v = 1/|T| sum_F |F| v_b n_F
//!   curl_w v = -1/|T| sum_F |F| v_b x n_F
//! ```
//!
//! with `n_F` the outward unit normal of face `F` of `T`.

pub mod quadrature;

pub use quadrature::{Quadrature, QuadratureRule, SingularEdge};

use crate::mesh::Mesh;
use crate::{Error, Result, Vec3};

/// Geometry of one tetrahedron; face `i` is opposite corner `i`.
#[derive(Debug, Clone)]
pub struct TetGeometry {
    pub corners: [Vec3; 4],
    pub volume: f64,
    pub face_areas: [f64; 4],
    pub normals: [Vec3; 4],
}

impl TetGeometry {
    pub fn new(corners: [Vec3; 4]) -> Result<Self> {
        let volume = quadrature::tet_volume(&corners);
        let scale = (corners[1] - corners[0]).norm();
        if !(volume > 1e-14 * scale.powi(3)) {
            return Err(Error::InvalidGeometry("degenerate tetrahedron".into()));
        }
        let mut face_areas = [0.0; 4];
        let mut normals = [Vec3::zeros(); 4];
        for i in 0..4 {
            let f = Self::face_indices(i);
            let (a, b, c) = (corners[f[0]], corners[f[1]], corners[f[2]]);
            let cross = (b - a).cross(&(c - a));
            face_areas[i] = 0.5 * cross.norm();
            let mut n = cross.normalize();
            if n.dot(&(a - corners[i])) < 0.0 {
                n = -n;
            }
            normals[i] = n;
        }
        Ok(Self { corners, volume, face_areas, normals })
    }

    /// Geometry of mesh element `t`, using the mesh's stored face data.
    pub fn from_mesh(mesh: &Mesh, t: usize) -> Self {
        let e = &mesh.elements[t];
        Self {
            corners: mesh.element_corners(t),
            volume: e.volume,
            face_areas: e.faces.map(|f| mesh.faces[f].area),
            normals: std::array::from_fn(|i| e.outward_normal(mesh, i)),
        }
    }

    pub fn face_indices(i: usize) -> [usize; 3] {
        match i {
            0 => [1, 2, 3],
            1 => [0, 2, 3],
            2 => [0, 1, 3],
            _ => [0, 1, 2],
        }
    }

    pub fn face_corners(&self, i: usize) -> [Vec3; 3] {
        Self::face_indices(i).map(|k| self.corners[k])
    }
}

/// Scalar weak function `{v0, vb}` with one constant per face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarWeakFn0 {
    pub v0: f64,
    pub vb: [f64; 4],
}

/// Vector weak function `{v0, vb}`; each `vb` is tangential to its face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorWeakFn0 {
    pub v0: Vec3,
    pub vb: [Vec3; 4],
}

pub fn weak_gradient_p0(geom: &TetGeometry, v: &ScalarWeakFn0) -> Vec3 {
    let mut acc = Vec3::zeros();
    for i in 0..4 {
        acc += geom.normals[i] * (geom.face_areas[i] * v.vb[i]);
    }
    acc / geom.volume
}

pub fn weak_curl_p0(geom: &TetGeometry, v: &VectorWeakFn0) -> Result<Vec3> {
    let mut acc = Vec3::zeros();
    for i in 0..4 {
        let vb = v.vb[i];
        if vb.dot(&geom.normals[i]).abs() > 1e-12 * vb.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidInput(format!("face value {i} is not tangential")));
        }
        acc -= vb.cross(&geom.normals[i]) * geom.face_areas[i];
    }
    Ok(acc / geom.volume)
}

/// Cell mean of a scalar field.
pub fn project_cell(f: impl Fn(Vec3) -> f64, corners: &[Vec3; 4], quad: &Quadrature) -> f64 {
    quad.integrate_cell(corners, f) / quadrature::tet_volume(corners)
}

/// Cell mean of a vector field.
pub fn project_cell_vec(f: impl Fn(Vec3) -> Vec3, corners: &[Vec3; 4], quad: &Quadrature) -> Vec3 {
    quad.integrate_cell(corners, f) / quadrature::tet_volume(corners)
}

/// Face mean of a scalar field.
pub fn project_face(f: impl Fn(Vec3) -> f64, corners: &[Vec3; 3], quad: &Quadrature) -> f64 {
    quad.integrate_face(corners, f) / quadrature::triangle_area(corners)
}

/// Face mean of the tangential part `(n x f) x n` of a vector field.
pub fn project_face_tangential(
    f: impl Fn(Vec3) -> Vec3,
    corners: &[Vec3; 3],
    normal: &Vec3,
    quad: &Quadrature,
) -> Vec3 {
    let mean: Vec3 = quad.integrate_face(corners, f) / quadrature::triangle_area(corners);
    mean - normal * normal.dot(&mean)
}

/// `Q_h w` on one element: cell and face means.
pub fn project_scalar_weak(w: impl Fn(Vec3) -> f64, geom: &TetGeometry, quad: &Quadrature) -> ScalarWeakFn0 {
    ScalarWeakFn0 {
        v0: project_cell(&w, &geom.corners, quad),
        vb: std::array::from_fn(|i| project_face(&w, &geom.face_corners(i), quad)),
    }
}

/// Vector `Q_h psi` on one element: cell mean and tangential face means.
pub fn project_vector_weak(psi: impl Fn(Vec3) -> Vec3, geom: &TetGeometry, quad: &Quadrature) -> VectorWeakFn0 {
    VectorWeakFn0 {
        v0: project_cell_vec(&psi, &geom.corners, quad),
        vb: std::array::from_fn(|i| project_face_tangential(&psi, &geom.face_corners(i), &geom.normals[i], quad)),
    }
}
