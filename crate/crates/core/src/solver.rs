//! Sparse direct solves and the outer reweighted iteration.

use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, SymbolicCholesky};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use log::debug;

use crate::assembly::{assemble_f, build_system_with_rhs, IterateState, PdwgParams, SaddleSystem};
use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::spaces::{build_dof_map, DofMap};
use crate::weakcalc::Quadrature;
use crate::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-9;
/// Refinement stops once the residual is this far below `RESIDUAL_TOL`.
const REFINE_TARGET: f64 = 1e-12;
const MAX_REFINE: usize = 60;
/// Diagonal shift of the equilibrated matrix, whose entries are at most 1.
const SHIFT: f64 = 1e-10;

/// Symmetric indefinite solver for the saddle system.
///
/// The matrix is equilibrated, then shifted by `+delta` on the `lambda, q`
/// block and `-delta` on the `u, s, mu` block, which makes it quasi-definite and so factorable
/// as `L D L^T` in any symmetric ordering (AMD here). Iterative refinement
/// against the unshifted matrix removes the shift. The symbolic factorization
/// of the first matrix is kept; later matrices must share its pattern.
#[derive(Default)]
pub struct LinearSolver {
    symbolic: Option<SymbolicCholesky<usize>>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the solution and its relative residual.
    pub fn solve(&mut self, system: &SaddleSystem) -> Result<(Vec<f64>, f64)> {
        let a = &system.matrix;
        let n = system.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Solve(format!("matrix is {}x{}, rhs has {n} entries", a.nrows(), a.ncols())));
        }
        let bnorm = norm(&system.rhs);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], 0.0));
        }
        let scale = equilibration(a);
        let shifted = shifted_lower(a, &scale, system.positive_dim())?;
        if self.symbolic.is_none() {
            let s = factorize_symbolic_cholesky(shifted.symbolic(), Side::Lower, Default::default(), Default::default())
                .map_err(|e| Error::Solve(format!("symbolic factorization: {e:?}")))?;
            self.symbolic = Some(s);
        }
        let symbolic = self.symbolic.as_ref().expect("set above");
        let par = Par::Seq;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .map_err(|_| Error::Solve("out of memory".into()))?;
        let ldlt = symbolic
            .factorize_numeric_ldlt(&mut values, shifted.as_ref(), Side::Lower, Default::default(), par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| Error::Solve(format!("numeric factorization: {e:?}")))?;
        let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, par));
        // x = D (D A D + shift)^-1 D r
        let mut apply = |r: &[f64]| -> Vec<f64> {
            let mut m = Mat::from_fn(n, 1, |i, _| scale[i] * r[i]);
            ldlt.solve_in_place_with_conj(Conj::No, m.as_mut(), par, MemStack::new(&mut mem));
            (0..n).map(|i| scale[i] * m[(i, 0)]).collect()
        };

        let mut x = apply(&system.rhs);
        let mut r = residual(a, &x, &system.rhs);
        let mut res = norm(&r) / bnorm;
        for _ in 0..MAX_REFINE {
            if !res.is_finite() || res <= REFINE_TARGET {
                break;
            }
            let dx = apply(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let tr = residual(a, &trial, &system.rhs);
            let tres = norm(&tr) / bnorm;
            if !(tres < res) {
                break;
            }
            (x, r, res) = (trial, tr, tres);
        }
        if !res.is_finite() || res > RESIDUAL_TOL {
            return Err(Error::Solve(format!("relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}; the system may have a nontrivial kernel")));
        }
        Ok((x, res))
    }
}

/// Symmetric scaling `d_i = 1 / sqrt(max_j |a_ij|)`.
fn equilibration(a: &SparseColMat<usize, f64>) -> Vec<f64> {
    let mut row_max = vec![0.0f64; a.nrows()];
    for j in 0..a.ncols() {
        for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
            row_max[i] = row_max[i].max(v.abs());
        }
    }
    row_max.iter().map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 }).collect()
}

/// Lower triangle of `D A D + diag(+delta, ..., -delta, ...)`, with the
/// first `positive` unknowns shifted up and the rest shifted down.
fn shifted_lower(a: &SparseColMat<usize, f64>, d: &[f64], positive: usize) -> Result<SparseColMat<usize, f64>> {
    let n = a.ncols();
    let mut triplets = Vec::with_capacity(a.compute_nnz() / 2 + n);
    for j in 0..n {
        let mut diag = 0.0;
        for (i, &v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
            if i > j {
                triplets.push(Triplet::new(i, j, d[i] * v * d[j]));
            } else if i == j {
                diag = d[j] * v * d[j];
            }
        }
        let shift = if j < positive { SHIFT } else { -SHIFT };
        triplets.push(Triplet::new(j, j, diag + shift));
    }
    SparseColMat::try_new_from_triplets(n, n, &triplets).map_err(|e| Error::Solve(format!("shifted matrix: {e:?}")))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn residual(a: &SparseColMat<usize, f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for j in 0..a.ncols() {
        for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
            r[i] -= v * x[j];
        }
    }
    r
}

/// `||A x - b|| / ||b||`.
pub fn relative_residual(a: &SparseColMat<usize, f64>, x: &[f64], b: &[f64]) -> f64 {
    norm(&residual(a, x, b)) / norm(b)
}

fn max_update(x: &[f64], prev: &[f64]) -> f64 {
    x.iter().zip(prev).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
}

/// One-shot solve of a square system.
pub fn solve_linear(system: &SaddleSystem) -> Result<Vec<f64>> {
    LinearSolver::new().solve(system).map(|(x, _)| x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Max absolute coefficient change from the previous iterate.
    pub update: f64,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Cell values of `u_h`, three per element.
    pub u: Vec<f64>,
    /// `s_0` followed by `s_b` coefficients.
    pub s: Vec<f64>,
    /// `lambda_0`, `lambda_b` and the multiplier.
    pub lambda: Vec<f64>,
    /// `q_0` followed by the tangential `q_b` coefficients.
    pub q: Vec<f64>,
    /// Full coefficient vector.
    pub coeffs: Vec<f64>,
    pub dofs: DofMap,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// `u_h` on element `t`.
    pub fn u_cell(&self, t: usize) -> crate::Vec3 {
        crate::Vec3::new(self.u[3 * t], self.u[3 * t + 1], self.u[3 * t + 2])
    }
}

/// Runs the reweighted iteration from the zero state. At `p = 2` a single
/// linear solve is exact. Non-convergence is flagged, not an error.
pub fn run_pdwg(problem: &ProblemSpec, mesh: &Mesh, params: &PdwgParams, quad: &Quadrature) -> Result<SolveReport> {
    params.validate()?;
    let dofs = build_dof_map(mesh);
    let rhs = assemble_f(mesh, &dofs, problem, quad);
    let mut state = IterateState::zeros(&dofs);
    let mut solver = LinearSolver::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut residual = 0.0;
    let linear = params.is_linear();
    let max_iters = if linear { 1 } else { params.max_iters };
    for _ in 0..max_iters {
        let start = Instant::now();
        let system = build_system_with_rhs(mesh, &dofs, &problem.eps, params, &state, rhs.clone())?;
        let (x, res) = solver.solve(&system)?;
        let update = max_update(&x, &state.coeffs);
        residual = res;
        state.coeffs = x;
        history.push(IterationRecord { update, residual: res, seconds: start.elapsed().as_secs_f64() });
        debug!("iteration {}: update {update:.3e}, residual {res:.3e}", history.len());
        if linear || update <= params.tol {
            converged = true;
            break;
        }
    }
    let x = state.coeffs;
    let take = |r: std::ops::Range<usize>| x[r].to_vec();
    let lambda = [take(dofs.lambda_cell.range()), take(dofs.lambda_face.range()), vec![x[dofs.multiplier]]].concat();
    Ok(SolveReport {
        u: take(dofs.u.range()),
        s: [take(dofs.s_cell.range()), take(dofs.s_face.range())].concat(),
        lambda,
        q: [take(dofs.q_cell.range()), take(dofs.q_face.range())].concat(),
        iterations: history.len(),
        history,
        residual,
        converged,
        coeffs: x,
        dofs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, VoxelDomainSpec};
    use crate::problems::{affine_problem, example};
    use crate::Vec3;

    fn diag_system(d: &[f64], b: Vec<f64>) -> SaddleSystem {
        let tr: Vec<_> = d.iter().enumerate().map(|(i, &v)| Triplet::new(i, i, v)).collect();
        SaddleSystem {
            matrix: SparseColMat::try_new_from_triplets(d.len(), d.len(), &tr).unwrap(),
            rhs: b,
            dim_lambda: d.len(),
            dim_q: 0,
            dim_u: 0,
            dim_s: 0,
        }
    }

    #[test]
    fn diagonal_examples() {
        let x = solve_linear(&diag_system(&[2.0, -3.0], vec![2.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] + 1.0).abs() < 1e-15);
        assert_eq!(solve_linear(&diag_system(&[2.0, -3.0], vec![0.0, 0.0])).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn singular_system_is_reported() {
        assert!(solve_linear(&diag_system(&[1.0, 0.0], vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn linear_case_takes_one_iteration() {
        let problem = example(1, None).unwrap();
        let mesh = build_mesh(&problem.domain, 1).unwrap();
        let params = PdwgParams::new(2.0, 1.0, 1.0).unwrap();
        let r = run_pdwg(&problem, &mesh, &params, &Quadrature::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged && r.residual <= 1e-9);
        assert_eq!(r.u.len(), 3 * mesh.num_elements());
        assert_eq!(r.lambda.len() + r.q.len() + r.u.len() + r.s.len(), r.dofs.dim());
    }

    #[test]
    fn constant_field_is_reproduced() {
        let problem = affine_problem(VoxelDomainSpec::unit_cube(), [1.0; 3], nalgebra::Matrix3::zeros(), Vec3::new(1.0, 2.0, 3.0));
        let mesh = build_mesh(&problem.domain, 2).unwrap();
        let params = PdwgParams::new(2.0, 1.0, 1.0).unwrap();
        let r = run_pdwg(&problem, &mesh, &params, &Quadrature::default()).unwrap();
        for t in 0..mesh.num_elements() {
            assert!((r.u_cell(t) - Vec3::new(1.0, 2.0, 3.0)).norm() <= 1e-9);
        }
        assert!(r.lambda.iter().chain(&r.q).chain(&r.s).all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn load_scaling_scales_solution() {
        let problem = example(1, None).unwrap();
        let mesh = build_mesh(&problem.domain, 1).unwrap();
        let dofs = build_dof_map(&mesh);
        let params = PdwgParams::new(2.0, 1.0, 1.0).unwrap();
        let rhs = assemble_f(&mesh, &dofs, &problem, &Quadrature::default());
        let state = IterateState::zeros(&dofs);
        let a = build_system_with_rhs(&mesh, &dofs, &problem.eps, &params, &state, rhs.clone()).unwrap();
        let b = build_system_with_rhs(&mesh, &dofs, &problem.eps, &params, &state, rhs.iter().map(|v| 2.5 * v).collect()).unwrap();
        let (xa, xb) = (solve_linear(&a).unwrap(), solve_linear(&b).unwrap());
        let scale = xa.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in xa.iter().zip(&xb) {
            assert!((2.5 * u - v).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn nonlinear_iteration_stops_on_tolerance() {
        let problem = example(1, None).unwrap();
        let mesh = build_mesh(&problem.domain, 1).unwrap();
        let params = PdwgParams::new(2.5, 900.0, 900.0).unwrap();
        let r = run_pdwg(&problem, &mesh, &params, &Quadrature::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations > 1 && r.iterations < 100);
        assert_eq!(r.history.len(), r.iterations);
        assert!(r.history.last().unwrap().update <= 1e-5);
        assert!(r.residual <= 1e-9);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let problem = example(1, None).unwrap();
        let mesh = build_mesh(&problem.domain, 1).unwrap();
        let mut params = PdwgParams::new(3.0, 900.0, 900.0).unwrap();
        params.max_iters = 2;
        let r = run_pdwg(&problem, &mesh, &params, &Quadrature::default()).unwrap();
        assert_eq!(r.iterations, 2);
        assert!(!r.converged);
    }
}
