//! Structured tetrahedral meshes of voxel-union domains.
//!
//! A domain is a box on the integer lattice minus a list of excluded
//! lattice boxes, scaled by a base unit length. Each unit voxel is refined
//! into `n^3` cubes and every cube is split into six tetrahedra of equal
//! volume sharing the cube's main diagonal (Kuhn subdivision). All cubes
//! use the same orientation, so neighbouring tetrahedra are face-conforming.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::{Error, Result, Vec3};

/// Axis-aligned box on the integer lattice, `lower[i] < upper[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    pub lower: [i64; 3],
    pub upper: [i64; 3],
}

impl LatticeBox {
    pub fn new(lower: [i64; 3], upper: [i64; 3]) -> Self {
        Self { lower, upper }
    }

    fn contains_voxel(&self, v: [i64; 3]) -> bool {
        (0..3).all(|i| self.lower[i] <= v[i] && v[i] < self.upper[i])
    }

    fn contains_box(&self, other: &LatticeBox) -> bool {
        (0..3).all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }

    fn is_proper(&self) -> bool {
        (0..3).all(|i| self.lower[i] < self.upper[i])
    }
}

/// A bounding lattice box minus excluded boxes, at physical scale `unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelDomainSpec {
    pub bounds: LatticeBox,
    pub excluded: Vec<LatticeBox>,
    pub unit: f64,
}

impl VoxelDomainSpec {
    pub fn new(bounds: LatticeBox, excluded: Vec<LatticeBox>, unit: f64) -> Self {
        Self { bounds, excluded, unit }
    }

    /// The unit cube `(0,1)^3`.
    pub fn unit_cube() -> Self {
        Self::new(LatticeBox::new([0, 0, 0], [1, 1, 1]), vec![], 1.0)
    }

    /// Included unit voxels, identified by their lower lattice corner.
    pub fn voxels(&self) -> Vec<[i64; 3]> {
        let b = &self.bounds;
        let mut out = Vec::new();
        for k in b.lower[2]..b.upper[2] {
            for j in b.lower[1]..b.upper[1] {
                for i in b.lower[0]..b.upper[0] {
                    let v = [i, j, k];
                    if !self.excluded.iter().any(|e| e.contains_voxel(v)) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Physical volume of the domain.
    pub fn volume(&self) -> f64 {
        self.voxels().len() as f64 * self.unit.powi(3)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.unit > 0.0 && self.unit.is_finite()) {
            return Err(Error::InvalidDomain(format!("unit length {} must be positive", self.unit)));
        }
        if !self.bounds.is_proper() {
            return Err(Error::InvalidDomain("bounding box is empty".into()));
        }
        for e in &self.excluded {
            if !e.is_proper() {
                return Err(Error::InvalidDomain(format!("excluded box {e:?} is empty")));
            }
            if !self.bounds.contains_box(e) {
                return Err(Error::InvalidDomain(format!("excluded box {e:?} leaves the bounding box")));
            }
        }
        let voxels = self.voxels();
        if voxels.is_empty() {
            return Err(Error::InvalidDomain("no voxels remain".into()));
        }
        let set: HashSet<[i64; 3]> = voxels.iter().copied().collect();
        let mut seen = HashSet::with_capacity(set.len());
        let mut queue = VecDeque::from([voxels[0]]);
        seen.insert(voxels[0]);
        while let Some(v) = queue.pop_front() {
            for axis in 0..3 {
                for step in [-1, 1] {
                    let mut w = v;
                    w[axis] += step;
                    if set.contains(&w) && seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        if seen.len() != set.len() {
            return Err(Error::InvalidDomain("voxel set is not face-connected".into()));
        }
        Ok(())
    }
}

/// Orthonormal frame of a face: unit normal plus two tangents with
/// `t1 x t2 = normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub normal: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
}

/// Frame of the triangle with the given corners; the normal follows the
/// corner order. The first tangent is the projection of the coordinate axis
/// least aligned with the normal (lowest index on ties).
pub fn face_frame(corners: &[Vec3; 3]) -> Result<FaceFrame> {
    let cross = (corners[1] - corners[0]).cross(&(corners[2] - corners[0]));
    let len = cross.norm();
    let scale = (corners[1] - corners[0]).norm().max((corners[2] - corners[0]).norm());
    if !(len > 1e-14 * scale * scale) {
        return Err(Error::InvalidGeometry("zero-area face".into()));
    }
    let normal = cross / len;
    Ok(frame_from_normal(normal))
}

pub(crate) fn frame_from_normal(normal: Vec3) -> FaceFrame {
    let mut axis = 0;
    for i in 1..3 {
        if normal[i].abs() < normal[axis].abs() {
            axis = i;
        }
    }
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    let t1 = (e - normal * normal[axis]).normalize();
    let t2 = normal.cross(&t1);
    FaceFrame { normal, t1, t2 }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub vertices: [usize; 4],
    pub volume: f64,
    /// Longest edge.
    pub diameter: f64,
    pub centroid: Vec3,
    /// Face `i` is opposite vertex `i`.
    pub faces: [usize; 4],
    /// `+1` when the face's global normal points out of this element.
    pub face_signs: [f64; 4],
}

impl Element {
    /// Outward unit normal of local face `i`.
    pub fn outward_normal(&self, mesh: &Mesh, i: usize) -> Vec3 {
        mesh.faces[self.faces[i]].normal * self.face_signs[i]
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Vertices in lexicographic coordinate order; the normal follows it.
    pub vertices: [usize; 3],
    pub area: f64,
    pub normal: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    pub centroid: Vec3,
    /// First adjacent element and its local face index.
    pub owner: (usize, usize),
    /// Second adjacent element for interior faces.
    pub neighbor: Option<(usize, usize)>,
    /// Boundary component label, `None` for interior faces.
    pub boundary: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryComponent {
    pub id: usize,
    pub faces: Vec<usize>,
}

impl BoundaryComponent {
    pub fn is_exterior(&self) -> bool {
        self.id == 0
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Largest element diameter.
    pub h: f64,
    /// Refinement level: cubes per unit voxel edge.
    pub refinement: usize,
    /// Edge length of the sub-cubes.
    pub cube_size: f64,
    pub num_components: usize,
}

// Kuhn subdivision: every monotone lattice path (0,0,0) -> (1,1,1) is a
// tetrahedron; one per permutation of the axes.
const AXIS_PERMUTATIONS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Builds the Kuhn tetrahedral mesh of `spec` with `n` cubes per voxel edge.
pub fn build_mesh(spec: &VoxelDomainSpec, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("refinement level must be at least 1".into()));
    }
    spec.validate()?;
    let n_i = n as i64;
    let cube_size = spec.unit / n as f64;

    let mut vertex_ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut lattice: Vec<[i64; 3]> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();

    let mut vertex_id = |p: [i64; 3], lattice: &mut Vec<[i64; 3]>| -> usize {
        *vertex_ids.entry(p).or_insert_with(|| {
            lattice.push(p);
            lattice.len() - 1
        })
    };

    for voxel in spec.voxels() {
        for c in 0..n_i {
            for b in 0..n_i {
                for a in 0..n_i {
                    let origin = [voxel[0] * n_i + a, voxel[1] * n_i + b, voxel[2] * n_i + c];
                    for perm in AXIS_PERMUTATIONS {
                        let mut p = origin;
                        let mut tet = [0usize; 4];
                        tet[0] = vertex_id(p, &mut lattice);
                        for (k, &axis) in perm.iter().enumerate() {
                            p[axis] += 1;
                            tet[k + 1] = vertex_id(p, &mut lattice);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
    }

    let vertices: Vec<Vec3> = lattice
        .iter()
        .map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) * cube_size)
        .collect();

    let mut elements = Vec::with_capacity(tets.len());
    let mut faces: Vec<Face> = Vec::new();
    let mut face_ids: HashMap<[usize; 3], usize> = HashMap::new();

    for (t, tet) in tets.iter_mut().enumerate() {
        let x = tet.map(|v| vertices[v]);
        let signed = (x[1] - x[0]).cross(&(x[2] - x[0])).dot(&(x[3] - x[0])) / 6.0;
        if signed < 0.0 {
            tet.swap(2, 3);
        }
        let x = tet.map(|v| vertices[v]);
        let volume = signed.abs();
        let centroid = (x[0] + x[1] + x[2] + x[3]) / 4.0;
        let mut diameter: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                diameter = diameter.max((x[i] - x[j]).norm());
            }
        }

        let mut elem_faces = [0usize; 4];
        let mut signs = [0.0; 4];
        for i in 0..4 {
            let mut fv = [0usize; 3];
            let mut k = 0;
            for (j, &v) in tet.iter().enumerate() {
                if j != i {
                    fv[k] = v;
                    k += 1;
                }
            }
            fv.sort_by_key(|&v| lattice[v]);
            let id = match face_ids.get(&fv) {
                Some(&id) => {
                    let face = &mut faces[id];
                    if face.neighbor.is_some() {
                        return Err(Error::InvalidGeometry("face shared by more than two elements".into()));
                    }
                    face.neighbor = Some((t, i));
                    id
                }
                None => {
                    let corners = fv.map(|v| vertices[v]);
                    let frame = face_frame(&corners)?;
                    let area = 0.5 * (corners[1] - corners[0]).cross(&(corners[2] - corners[0])).norm();
                    let id = faces.len();
                    faces.push(Face {
                        vertices: fv,
                        area,
                        normal: frame.normal,
                        t1: frame.t1,
                        t2: frame.t2,
                        centroid: (corners[0] + corners[1] + corners[2]) / 3.0,
                        owner: (t, i),
                        neighbor: None,
                        boundary: None,
                    });
                    face_ids.insert(fv, id);
                    id
                }
            };
            elem_faces[i] = id;
            signs[i] = if faces[id].normal.dot(&(faces[id].centroid - centroid)) > 0.0 { 1.0 } else { -1.0 };
        }
        elements.push(Element { vertices: *tet, volume, diameter, centroid, faces: elem_faces, face_signs: signs });
    }

    let h = elements.iter().map(|e| e.diameter).fold(0.0, f64::max);
    let mut mesh = Mesh { vertices, elements, faces, h, refinement: n, cube_size, num_components: 0 };
    let components = boundary_components(&mesh);
    for comp in &components {
        for &f in &comp.faces {
            mesh.faces[f].boundary = Some(comp.id);
        }
    }
    mesh.num_components = components.len();
    Ok(mesh)
}

/// Groups boundary faces into connected surfaces by flood fill over shared
/// edges. The component holding the face with the smallest centroid
/// (lexicographic in x, y, z) is the exterior one and gets id 0; the others
/// are numbered by their smallest face id.
pub fn boundary_components(mesh: &Mesh) -> Vec<BoundaryComponent> {
    let boundary: Vec<usize> = (0..mesh.faces.len()).filter(|&f| mesh.faces[f].is_boundary()).collect();
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &f in &boundary {
        let v = mesh.faces[f].vertices;
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])] {
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }

    let mut label: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &start in &boundary {
        if label.contains_key(&start) {
            continue;
        }
        let g = groups.len();
        let mut members = vec![start];
        label.insert(start, g);
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            let v = mesh.faces[f].vertices;
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])] {
                for &nb in &edge_faces[&(a.min(b), a.max(b))] {
                    if let std::collections::hash_map::Entry::Vacant(e) = label.entry(nb) {
                        e.insert(g);
                        members.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let extremal = boundary.iter().copied().min_by(|&a, &b| {
        let (ca, cb) = (mesh.faces[a].centroid, mesh.faces[b].centroid);
        ca.x.total_cmp(&cb.x).then(ca.y.total_cmp(&cb.y)).then(ca.z.total_cmp(&cb.z))
    });
    let exterior = extremal.map(|f| label[&f]).unwrap_or(0);

    let mut ordered: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    let mut rest = Vec::new();
    for (g, members) in groups.into_iter().enumerate() {
        if g == exterior {
            ordered.insert(0, members);
        } else {
            rest.push(members);
        }
    }
    rest.sort_by_key(|m| m[0]);
    ordered.extend(rest);
    ordered.into_iter().enumerate().map(|(id, faces)| BoundaryComponent { id, faces }).collect()
}

impl Mesh {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.len() - self.num_boundary_faces()
    }

    pub fn volume(&self) -> f64 {
        self.elements.iter().map(|e| e.volume).sum()
    }

    /// Corner coordinates of element `t`.
    pub fn element_corners(&self, t: usize) -> [Vec3; 4] {
        self.elements[t].vertices.map(|v| self.vertices[v])
    }

    /// Corner coordinates of face `f`.
    pub fn face_corners(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].vertices.map(|v| self.vertices[v])
    }

    /// Recomputes the boundary components; labels are already stored on faces.
    pub fn boundary_components(&self) -> Vec<BoundaryComponent> {
        boundary_components(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> VoxelDomainSpec {
        VoxelDomainSpec::new(LatticeBox::new([0, 0, 0], [2, 2, 1]), vec![LatticeBox::new([1, 0, 0], [2, 1, 1])], 1.0)
    }

    #[test]
    fn unit_cube_census() {
        let mesh = build_mesh(&VoxelDomainSpec::unit_cube(), 1).unwrap();
        assert_eq!(mesh.num_elements(), 6);
        assert_eq!(mesh.num_boundary_faces(), 12);
        assert_eq!(mesh.num_interior_faces(), 6);
        assert_eq!(mesh.vertices.len(), 8);
        for e in &mesh.elements {
            assert!((e.volume - 1.0 / 6.0).abs() < 1e-15);
            assert!((e.diameter - 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn l_shape_element_count() {
        let mesh = build_mesh(&l_shape(), 1).unwrap();
        assert_eq!(mesh.num_elements(), 18);
    }

    #[test]
    fn refinement_multiplies_by_eight() {
        let spec = l_shape();
        let a = build_mesh(&spec, 1).unwrap();
        let b = build_mesh(&spec, 2).unwrap();
        let c = build_mesh(&spec, 4).unwrap();
        assert_eq!(b.num_elements(), 8 * a.num_elements());
        assert_eq!(c.num_elements(), 8 * b.num_elements());
    }

    #[test]
    fn closed_surface_identity_and_volume() {
        let spec = VoxelDomainSpec::new(
            LatticeBox::new([-2, -2, 0], [3, 3, 1]),
            vec![LatticeBox::new([-1, -1, 0], [0, 0, 1]), LatticeBox::new([1, -1, 0], [2, 0, 1])],
            0.5,
        );
        let mesh = build_mesh(&spec, 2).unwrap();
        for e in &mesh.elements {
            let mut s = Vec3::zeros();
            for i in 0..4 {
                s += e.outward_normal(&mesh, i) * mesh.faces[e.faces[i]].area;
            }
            assert!(s.norm() < 1e-12);
            assert!(e.volume > 0.0);
        }
        assert!((mesh.volume() - spec.volume()).abs() < 1e-12 * spec.volume());
    }

    #[test]
    fn interior_faces_see_opposite_signs() {
        let mesh = build_mesh(&l_shape(), 2).unwrap();
        for f in &mesh.faces {
            match f.neighbor {
                Some((t2, i2)) => {
                    let (t1, i1) = f.owner;
                    assert_eq!(mesh.elements[t1].face_signs[i1], -mesh.elements[t2].face_signs[i2]);
                }
                None => {
                    let (t, i) = f.owner;
                    // boundary normals point away from the element centroid
                    let e = &mesh.elements[t];
                    assert!(e.outward_normal(&mesh, i).dot(&(f.centroid - e.centroid)) > 0.0);
                }
            }
        }
    }

    #[test]
    fn component_counts() {
        let cube = build_mesh(&VoxelDomainSpec::unit_cube(), 1).unwrap();
        assert_eq!(boundary_components(&cube).len(), 1);

        let cavity = VoxelDomainSpec::new(
            LatticeBox::new([0, 0, 0], [3, 3, 3]),
            vec![LatticeBox::new([1, 1, 1], [2, 2, 2])],
            1.0,
        );
        let mesh = build_mesh(&cavity, 1).unwrap();
        let comps = boundary_components(&mesh);
        assert_eq!(comps.len(), 2);
        assert!(comps[0].is_exterior());
        // 6 cavity walls, 2 triangles each
        assert_eq!(comps[1].faces.len(), 12);
        let total: usize = comps.iter().map(|c| c.faces.len()).sum();
        assert_eq!(total, mesh.num_boundary_faces());

        let through_hole = VoxelDomainSpec::new(
            LatticeBox::new([-2, -2, 0], [1, 1, 1]),
            vec![LatticeBox::new([-1, -1, 0], [0, 0, 1])],
            0.5,
        );
        let mesh = build_mesh(&through_hole, 1).unwrap();
        assert_eq!(boundary_components(&mesh).len(), 1);
    }

    #[test]
    fn rejects_bad_domains() {
        let split = VoxelDomainSpec::new(
            LatticeBox::new([0, 0, 0], [3, 1, 1]),
            vec![LatticeBox::new([1, 0, 0], [2, 1, 1])],
            1.0,
        );
        assert!(matches!(build_mesh(&split, 1), Err(Error::InvalidDomain(_))));
        let empty = VoxelDomainSpec::new(
            LatticeBox::new([0, 0, 0], [1, 1, 1]),
            vec![LatticeBox::new([0, 0, 0], [1, 1, 1])],
            1.0,
        );
        assert!(matches!(build_mesh(&empty, 1), Err(Error::InvalidDomain(_))));
        let outside = VoxelDomainSpec::new(
            LatticeBox::new([0, 0, 0], [2, 2, 1]),
            vec![LatticeBox::new([0, -1, 0], [1, 0, 1])],
            1.0,
        );
        assert!(outside.validate().is_err());
        assert!(build_mesh(&VoxelDomainSpec::unit_cube(), 0).is_err());
    }

    #[test]
    fn frame_is_orthonormal_and_deterministic() {
        let corners = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 0.0)];
        let fr = face_frame(&corners).unwrap();
        assert!((fr.normal - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(fr.t1.x.abs() < 1e-15 && fr.t2.x.abs() < 1e-15);
        assert!((fr.t1.norm() - 1.0).abs() < 1e-15 && (fr.t2.norm() - 1.0).abs() < 1e-15);
        assert!(fr.t1.dot(&fr.t2).abs() < 1e-15);
        assert!((fr.normal.cross(&fr.t1) - fr.t2).norm() < 1e-15);
        assert_eq!(face_frame(&corners).unwrap(), fr);

        let degenerate = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert!(face_frame(&degenerate).is_err());
    }
}
