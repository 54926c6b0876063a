//! One mesh, solve and measure pass.

use std::time::Instant;

use crate::analysis::{error_lq, error_lq_cellwise, project_cells, triple_norm_dual, triple_norm_s, ErrorRecord};
use crate::assembly::PdwgParams;
use crate::mesh::{build_mesh, Mesh};
use crate::problems::ProblemSpec;
use crate::solver::{run_pdwg, SolveReport};
use crate::weakcalc::Quadrature;
use crate::{Result, Vec3};

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub record: ErrorRecord,
    pub mesh: Mesh,
    pub report: SolveReport,
    /// `Q_h u - u_h` per element.
    pub eta: Vec<Vec3>,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

/// Solves `problem` on the mesh with `1/h = inv_h` and measures the errors.
/// `quad_degree` sets the quadrature; singular edges are refined locally.
pub fn run_case(problem: &ProblemSpec, inv_h: usize, params: &PdwgParams, quad_degree: usize) -> Result<CaseOutcome> {
    let start = Instant::now();
    let n = problem.refinement_for(inv_h)?;
    let mesh = build_mesh(&problem.domain, n)?;
    let quad = Quadrature::new(quad_degree, problem.singular_edges.clone());
    let solve_start = Instant::now();
    let report = run_pdwg(problem, &mesh, params, &quad)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let u_h: Vec<Vec3> = (0..mesh.num_elements()).map(|t| report.u_cell(t)).collect();
    let qu = project_cells(&mesh, |x| problem.u(&x), &quad);
    let eta: Vec<Vec3> = qu.iter().zip(&u_h).map(|(a, b)| a - b).collect();
    let record = ErrorRecord {
        inv_h,
        e_u: error_lq(&mesh, &u_h, |x| problem.u(&x), &problem.eps, params.q, &quad),
        eta_u: error_lq_cellwise(&mesh, &u_h, &qu, &problem.eps, params.q),
        dual: triple_norm_dual(&mesh, &report.dofs, &report.coeffs, params),
        s_norm: triple_norm_s(&mesh, &report.dofs, &report.coeffs, params),
        iterations: report.iterations,
        converged: report.converged,
    };
    Ok(CaseOutcome { record, mesh, report, eta, solve_seconds, total_seconds: start.elapsed().as_secs_f64() })
}

/// Default parameters of `problem` at exponent `p`.
pub fn default_params(problem: &ProblemSpec, p: f64) -> Result<PdwgParams> {
    let rho = problem.default_rho(p);
    PdwgParams::new(p, rho, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::example;
    use crate::weakcalc::quadrature::DEFAULT_DEGREE;

    #[test]
    fn eta_is_bounded_by_error_plus_projection_error() {
        let problem = example(1, None).unwrap();
        let params = default_params(&problem, 2.0).unwrap();
        let out = run_case(&problem, 1, &params, DEFAULT_DEGREE).unwrap();
        let quad = Quadrature::default();
        let qu = project_cells(&out.mesh, |x| problem.u(&x), &quad);
        let proj = error_lq(&out.mesh, &qu, |x| problem.u(&x), &problem.eps, params.q, &quad);
        let r = &out.record;
        assert!(r.e_u >= 0.0 && r.eta_u >= 0.0 && r.dual >= 0.0 && r.s_norm >= 0.0);
        assert!(r.eta_u <= r.e_u + proj + 1e-12);
        assert_eq!(out.eta.len(), out.mesh.num_elements());
    }

    #[test]
    fn default_params_follow_catalog() {
        let problem = example(5, None).unwrap();
        let params = default_params(&problem, 3.0).unwrap();
        assert_eq!((params.rho1, params.rho2, params.rho3), (5e4, 5e4, 1.0));
    }
}
