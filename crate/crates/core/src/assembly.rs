//! Saddle system of one reweighted iterate.
//!
//! Unknowns are ordered as in [`crate::spaces`]. The matrix is
//!
//! ```text
//!   [ S1   B   ] [ (lambda, q) ]   [ F ]
//!   [ B^T  -S2 ] [ (u, s)      ] = [ 0 ]
//! ```
//!
//! bordered by the multiplier row `sum_T |T| lambda_0 = 0`. `S1` and `S2`
//! are the stabilizers linearised with weights frozen at the previous
//! iterate.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::SMatrix;

use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::spaces::{DofMap, LOCAL_DIM, LOCAL_LAMBDA0, LOCAL_LAMBDAB, LOCAL_Q0, LOCAL_QB, LOCAL_S0, LOCAL_SB, LOCAL_U};
use crate::vec3::diag_mul;
use crate::weakcalc::Quadrature;
use crate::{Error, Result, Vec3};

type Local = SMatrix<f64, LOCAL_DIM, LOCAL_DIM>;

#[derive(Debug, Clone, PartialEq)]
pub struct PdwgParams {
    pub p: f64,
    pub q: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub eps0: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl PdwgParams {
    /// `q`, `eps0` and the iteration controls take their defaults; `rho3 = 1`.
    pub fn new(p: f64, rho1: f64, rho2: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        let params = Self {
            p,
            q: p / (p - 1.0),
            rho1,
            rho2,
            rho3: 1.0,
            eps0: Self::default_eps0(p),
            tol: 1e-5,
            max_iters: 100,
        };
        params.validate()?;
        Ok(params)
    }

    /// `10^(-6 / (p - 1))`.
    pub fn default_eps0(p: f64) -> f64 {
        10f64.powf(-6.0 / (p - 1.0))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.p > 1.0 && self.q > 1.0) {
            return bad("p and q must exceed 1");
        }
        if (1.0 / self.p + 1.0 / self.q - 1.0).abs() > 1e-15 {
            return bad("p and q are not conjugate");
        }
        for (name, v) in [("rho1", self.rho1), ("rho2", self.rho2), ("rho3", self.rho3), ("eps0", self.eps0), ("tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        (self.p - 2.0).abs() < 1e-12
    }
}

/// Coefficients of the previous iterate; only the `lambda`, `q` and `s`
/// blocks enter the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub coeffs: Vec<f64>,
}

impl IterateState {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self { coeffs: vec![0.0; dofs.dim()] }
    }

    pub fn from_coeffs(dofs: &DofMap, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dofs.dim() {
            return Err(Error::InvalidInput(format!("state has {} entries, expected {}", coeffs.len(), dofs.dim())));
        }
        Ok(Self { coeffs })
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
    pub dim_lambda: usize,
    pub dim_q: usize,
    pub dim_u: usize,
    pub dim_s: usize,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Unknowns ahead of the `u` block (`lambda` without `mu`, then `q`).
    pub fn positive_dim(&self) -> usize {
        (self.dim_lambda + self.dim_q).saturating_sub(1)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        self.matrix.to_dense()
    }
}

/// `(m + eps0)^(p - 2)`.
pub fn stabilizer_weight(m: f64, p: f64, eps0: f64) -> f64 {
    debug_assert!(m >= 0.0 && eps0 > 0.0);
    (m + eps0).powf(p - 2.0)
}

/// Per-face geometry of an element: outward normal, face frame, area.
struct FaceData {
    n: Vec3,
    t1: Vec3,
    t2: Vec3,
    area: f64,
}

fn face_data(mesh: &Mesh, t: usize) -> [FaceData; 4] {
    let e = &mesh.elements[t];
    std::array::from_fn(|i| {
        let face = &mesh.faces[e.faces[i]];
        FaceData { n: face.normal * e.face_signs[i], t1: face.t1, t2: face.t2, area: face.area }
    })
}

/// Jumps `lambda_0 - lambda_b`, `(q_0 - q_b) x n`, `s_0 - s_b` on local face `i`.
fn face_jumps(local: &[f64; LOCAL_DIM], fd: &FaceData, i: usize) -> (f64, Vec3, f64) {
    let q0 = Vec3::new(local[LOCAL_Q0], local[LOCAL_Q0 + 1], local[LOCAL_Q0 + 2]);
    let qb = fd.t1 * local[LOCAL_QB + 2 * i] + fd.t2 * local[LOCAL_QB + 2 * i + 1];
    (
        local[LOCAL_LAMBDA0] - local[LOCAL_LAMBDAB + i],
        (q0 - qb).cross(&fd.n),
        local[LOCAL_S0] - local[LOCAL_SB + i],
    )
}

/// Columns of the linear map from the local `q` unknowns of face `i` to
/// the jump `(q_0 - q_b) x n`.
fn q_jump_columns(fd: &FaceData, i: usize) -> [(usize, Vec3); 5] {
    [
        (LOCAL_Q0, Vec3::x().cross(&fd.n)),
        (LOCAL_Q0 + 1, Vec3::y().cross(&fd.n)),
        (LOCAL_Q0 + 2, Vec3::z().cross(&fd.n)),
        (LOCAL_QB + 2 * i, -fd.t1.cross(&fd.n)),
        (LOCAL_QB + 2 * i + 1, -fd.t2.cross(&fd.n)),
    ]
}

fn add_scalar_jump(k: &mut Local, cell: usize, face: usize, c: f64) {
    k[(cell, cell)] += c;
    k[(cell, face)] -= c;
    k[(face, cell)] -= c;
    k[(face, face)] += c;
}

fn local_s1(mesh: &Mesh, t: usize, prev: &[f64; LOCAL_DIM], params: &PdwgParams) -> Local {
    let e = &mesh.elements[t];
    let scale = e.diameter.powf(1.0 - params.p);
    let mut k = Local::zeros();
    for (i, fd) in face_data(mesh, t).iter().enumerate() {
        let (jl, jq, _) = face_jumps(prev, fd, i);
        let cl = params.rho1 * scale * fd.area * stabilizer_weight(jl.abs(), params.p, params.eps0);
        add_scalar_jump(&mut k, LOCAL_LAMBDA0, LOCAL_LAMBDAB + i, cl);
        let cq = params.rho2 * scale * fd.area * stabilizer_weight(jq.norm(), params.p, params.eps0);
        let cols = q_jump_columns(fd, i);
        for &(a, va) in &cols {
            for &(b, vb) in &cols {
                k[(a, b)] += cq * va.dot(&vb);
            }
        }
    }
    k
}

fn local_s2(mesh: &Mesh, t: usize, prev: &[f64; LOCAL_DIM], params: &PdwgParams) -> Local {
    let e = &mesh.elements[t];
    let scale = e.diameter.powf(1.0 - params.q);
    let mut k = Local::zeros();
    for (i, fd) in face_data(mesh, t).iter().enumerate() {
        let (_, _, js) = face_jumps(prev, fd, i);
        let c = params.rho3 * scale * fd.area * stabilizer_weight(js.abs(), params.q, params.eps0);
        add_scalar_jump(&mut k, LOCAL_S0, LOCAL_SB + i, c);
    }
    k
}

/// Rows are `(phi, psi)` tests, columns `(u, s)` unknowns.
fn local_b(mesh: &Mesh, t: usize, eps: &[f64; 3]) -> Local {
    let mut k = Local::zeros();
    for (i, fd) in face_data(mesh, t).iter().enumerate() {
        let en = diag_mul(eps, &fd.n) * fd.area;
        let c1 = -fd.t1.cross(&fd.n) * fd.area;
        let c2 = -fd.t2.cross(&fd.n) * fd.area;
        for d in 0..3 {
            k[(LOCAL_LAMBDAB + i, LOCAL_U + d)] += en[d];
            k[(LOCAL_QB + 2 * i, LOCAL_U + d)] += c1[d];
            k[(LOCAL_QB + 2 * i + 1, LOCAL_U + d)] += c2[d];
            k[(LOCAL_Q0 + d, LOCAL_SB + i)] += en[d];
        }
    }
    k
}

/// Local pairs that can be nonzero; fixing this set keeps the global
/// sparsity pattern identical across iterations.
fn local_pattern() -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut sym = |a: usize, b: usize| {
        pairs.push((a, b));
        if a != b {
            pairs.push((b, a));
        }
    };
    for (cell, face) in [(LOCAL_LAMBDA0, LOCAL_LAMBDAB), (LOCAL_S0, LOCAL_SB)] {
        sym(cell, cell);
        for i in 0..4 {
            sym(cell, face + i);
            sym(face + i, face + i);
        }
    }
    for a in 0..3 {
        for b in a..3 {
            sym(LOCAL_Q0 + a, LOCAL_Q0 + b);
        }
        for j in 0..8 {
            sym(LOCAL_Q0 + a, LOCAL_QB + j);
        }
    }
    for i in 0..4 {
        let (qa, qb) = (LOCAL_QB + 2 * i, LOCAL_QB + 2 * i + 1);
        sym(qa, qa);
        sym(qa, qb);
        sym(qb, qb);
    }
    for d in 0..3 {
        for i in 0..4 {
            sym(LOCAL_LAMBDAB + i, LOCAL_U + d);
            sym(LOCAL_QB + 2 * i, LOCAL_U + d);
            sym(LOCAL_QB + 2 * i + 1, LOCAL_U + d);
            sym(LOCAL_Q0 + d, LOCAL_SB + i);
        }
    }
    pairs
}

fn scatter_local(
    mesh: &Mesh,
    dofs: &DofMap,
    pattern: &[(usize, usize)],
    triplets: &mut Vec<Triplet<usize, usize, f64>>,
    local: impl Fn(usize) -> Local,
) {
    for t in 0..mesh.num_elements() {
        let k = local(t);
        let g = dofs.element_dofs(mesh, t);
        for &(a, b) in pattern {
            if let (Some(r), Some(c)) = (g[a], g[b]) {
                triplets.push(Triplet::new(r, c, k[(a, b)]));
            }
        }
    }
}

fn to_sparse(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<SparseColMat<usize, f64>> {
    SparseColMat::try_new_from_triplets(n, n, triplets).map_err(|e| Error::Solve(format!("sparse assembly failed: {e:?}")))
}

fn check_eps(eps: &[f64; 3]) -> Result<()> {
    if eps.iter().all(|&e| e > 0.0 && e.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps = {eps:?} is not positive definite")))
    }
}

fn check_state(dofs: &DofMap, state: &IterateState) -> Result<()> {
    if state.coeffs.len() != dofs.dim() {
        return Err(Error::InvalidInput(format!("state has {} entries, expected {}", state.coeffs.len(), dofs.dim())));
    }
    Ok(())
}

/// `B` as a `dim x dim` matrix with entries in the `(lambda, q) x (u, s)` block.
pub fn assemble_b(mesh: &Mesh, dofs: &DofMap, eps: &[f64; 3]) -> Result<SparseColMat<usize, f64>> {
    check_eps(eps)?;
    let pattern: Vec<_> = local_pattern().into_iter().filter(|&(a, b)| a < LOCAL_U && b >= LOCAL_U).collect();
    let mut tr = Vec::new();
    scatter_local(mesh, dofs, &pattern, &mut tr, |t| local_b(mesh, t, eps));
    to_sparse(dofs.dim(), &tr)
}

pub fn assemble_s1(mesh: &Mesh, dofs: &DofMap, state: &IterateState, params: &PdwgParams) -> Result<SparseColMat<usize, f64>> {
    check_state(dofs, state)?;
    let pattern: Vec<_> = local_pattern().into_iter().filter(|&(a, b)| a < LOCAL_U && b < LOCAL_U).collect();
    let mut tr = Vec::new();
    scatter_local(mesh, dofs, &pattern, &mut tr, |t| local_s1(mesh, t, &dofs.gather(mesh, t, &state.coeffs), params));
    to_sparse(dofs.dim(), &tr)
}

/// The positive semidefinite `S2`; the system uses `-S2`.
pub fn assemble_s2(mesh: &Mesh, dofs: &DofMap, state: &IterateState, params: &PdwgParams) -> Result<SparseColMat<usize, f64>> {
    check_state(dofs, state)?;
    let pattern: Vec<_> = local_pattern().into_iter().filter(|&(a, b)| a >= LOCAL_S0 && b >= LOCAL_S0).collect();
    let mut tr = Vec::new();
    scatter_local(mesh, dofs, &pattern, &mut tr, |t| local_s2(mesh, t, &dofs.gather(mesh, t, &state.coeffs), params));
    to_sparse(dofs.dim(), &tr)
}

/// Load vector: `(g, psi_0) - (f, phi_0) + <phi1, phi_b>` on the boundary.
pub fn assemble_f(mesh: &Mesh, dofs: &DofMap, problem: &ProblemSpec, quad: &Quadrature) -> Vec<f64> {
    let mut rhs = vec![0.0; dofs.dim()];
    for t in 0..mesh.num_elements() {
        let c = mesh.element_corners(t);
        let g: Vec3 = quad.integrate_cell(&c, |x| problem.g(&x));
        for d in 0..3 {
            rhs[dofs.q_cell.offset + 3 * t + d] += g[d];
        }
        rhs[dofs.lambda_cell.offset + t] -= quad.integrate_cell(&c, |x| problem.f(&x));
    }
    for (f, face) in mesh.faces.iter().enumerate() {
        if face.is_boundary() {
            let (t, i) = face.owner;
            let n = mesh.elements[t].outward_normal(mesh, i);
            let c = mesh.face_corners(f);
            rhs[dofs.lambda_face_dof(f)] += quad.integrate_face(&c, |x| problem.phi1(&x, &n));
        }
    }
    rhs
}

/// Full bordered system for one iterate.
pub fn build_system(
    mesh: &Mesh,
    dofs: &DofMap,
    problem: &ProblemSpec,
    params: &PdwgParams,
    state: &IterateState,
    quad: &Quadrature,
) -> Result<SaddleSystem> {
    let rhs = assemble_f(mesh, dofs, problem, quad);
    build_system_with_rhs(mesh, dofs, &problem.eps, params, state, rhs)
}

/// As [`build_system`] with a precomputed load vector.
pub fn build_system_with_rhs(
    mesh: &Mesh,
    dofs: &DofMap,
    eps: &[f64; 3],
    params: &PdwgParams,
    state: &IterateState,
    rhs: Vec<f64>,
) -> Result<SaddleSystem> {
    check_eps(eps)?;
    check_state(dofs, state)?;
    params.validate()?;
    if rhs.len() != dofs.dim() {
        return Err(Error::InvalidInput("load vector has the wrong length".into()));
    }
    let pattern = local_pattern();
    let mut tr = Vec::with_capacity(mesh.num_elements() * pattern.len() + 2 * mesh.num_elements());
    scatter_local(mesh, dofs, &pattern, &mut tr, |t| {
        let prev = dofs.gather(mesh, t, &state.coeffs);
        let b = local_b(mesh, t, eps);
        local_s1(mesh, t, &prev, params) + b + b.transpose() - local_s2(mesh, t, &prev, params)
    });
    for (t, &vol) in dofs.constraints.mean_zero.iter().enumerate() {
        let l0 = dofs.lambda_cell.offset + t;
        tr.push(Triplet::new(dofs.multiplier, l0, vol));
        tr.push(Triplet::new(l0, dofs.multiplier, vol));
    }
    Ok(SaddleSystem {
        matrix: to_sparse(dofs.dim(), &tr)?,
        rhs,
        dim_lambda: dofs.dim_lambda(),
        dim_q: dofs.dim_q(),
        dim_u: dofs.dim_u(),
        dim_s: dofs.dim_s(),
    })
}

/// Unsmoothed `s1(lambda, q; lambda, q) = sum rho h^(1-p) |F| (|jump_lambda|^p + |jump_q|^p)`.
pub fn s1_energy(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], params: &PdwgParams) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.num_elements() {
        let local = dofs.gather(mesh, t, coeffs);
        let scale = mesh.elements[t].diameter.powf(1.0 - params.p);
        for (i, fd) in face_data(mesh, t).iter().enumerate() {
            let (jl, jq, _) = face_jumps(&local, fd, i);
            total += scale * fd.area * (params.rho1 * jl.abs().powf(params.p) + params.rho2 * jq.norm().powf(params.p));
        }
    }
    total
}

/// Unsmoothed `s2(s; s) = sum rho3 h^(1-q) |F| |jump_s|^q`.
pub fn s2_energy(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], params: &PdwgParams) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.num_elements() {
        let local = dofs.gather(mesh, t, coeffs);
        let scale = mesh.elements[t].diameter.powf(1.0 - params.q);
        for (i, fd) in face_data(mesh, t).iter().enumerate() {
            let (_, _, js) = face_jumps(&local, fd, i);
            total += params.rho3 * scale * fd.area * js.abs().powf(params.q);
        }
    }
    total
}
