//! Experiment driver: runs an example over a grid of `p` and `1/h`, then
//! writes rate tables (CSV and Markdown), a JSON log and, optionally, VTK
//! files of `eta_h = Q_h u - u_h`.
//!
//! Files are named after the grid point: `ex1_p2_h2-8.csv` holds the rows
//! for example 1 at `p = 2` over `1/h = 2..8`, and `ex5_p2_h4_eta.vtk` the
//! field of one refinement. Example 4 adds its exponent, as in `ex4_g0.6667`.

pub mod config;

use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use pdwg_core::analysis::{export_field, ErrorRecord, RateTable};
use pdwg_core::assembly::PdwgParams;
use pdwg_core::problems::{example, ProblemSpec};
use pdwg_core::study::{run_case, CaseOutcome};
use rayon::prelude::*;
use serde::Serialize;

pub use config::ExperimentConfig;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
    /// Grid points solved concurrently; 0 lets rayon decide.
    pub threads: usize,
    /// Overrides the configured quadrature degree.
    pub quad_degree: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub tables: Vec<RateTable>,
    pub files: Vec<PathBuf>,
    pub all_converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub update: f64,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseLog {
    pub inv_h: usize,
    pub elements: usize,
    pub unknowns: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub history: Vec<IterationLog>,
    pub solve_seconds: f64,
    pub total_seconds: f64,
    pub e_u: f64,
    pub eta_u: f64,
    pub dual: f64,
    pub s_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunLog {
    pub example: usize,
    pub name: String,
    pub gamma: Option<f64>,
    pub p: f64,
    pub q: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub eps0: f64,
    pub default_eps0: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub quad_degree: usize,
    pub cases: Vec<CaseLog>,
}

/// File name prefix for the problem and exponent.
pub fn file_stem(problem: &ProblemSpec, p: f64) -> String {
    match problem.gamma {
        Some(g) => format!("ex{}_g{g:.4}_p{p}", problem.id),
        None => format!("ex{}_p{p}", problem.id),
    }
}

fn refinement_tag(refinements: &[usize]) -> String {
    match refinements {
        [one] => format!("h{one}"),
        [first, .., last] => format!("h{first}-{last}"),
        [] => "h".to_string(),
    }
}

fn case_log(out: &CaseOutcome) -> CaseLog {
    let r = &out.record;
    CaseLog {
        inv_h: r.inv_h,
        elements: out.mesh.num_elements(),
        unknowns: out.report.dofs.dim(),
        iterations: r.iterations,
        converged: r.converged,
        final_residual: out.report.residual,
        history: out
            .report
            .history
            .iter()
            .map(|h| IterationLog { update: h.update, residual: h.residual, seconds: h.seconds })
            .collect(),
        solve_seconds: out.solve_seconds,
        total_seconds: out.total_seconds,
        e_u: r.e_u,
        eta_u: r.eta_u,
        dual: r.dual,
        s_norm: r.s_norm,
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Runs every `(p, 1/h)` grid point of `config` and writes the artifacts.
/// Non-convergence is reported through `all_converged`, not as an error.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> anyhow::Result<RunSummary> {
    config.validate()?;
    let problem = config.problem()?;
    let quad_degree = opts.quad_degree.unwrap_or_else(|| config.quad_degree());
    let dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let params: Vec<PdwgParams> = config.p.iter().map(|&p| config.params(&problem, p)).collect::<anyhow::Result<_>>()?;
    let grid: Vec<(usize, usize)> =
        (0..params.len()).flat_map(|i| config.refinements.iter().map(move |&h| (i, h))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build()?;
    let outcomes: Vec<CaseOutcome> = pool.install(|| {
        grid.par_iter()
            .map(|&(i, inv_h)| {
                info!("example {} p = {} 1/h = {inv_h}", problem.id, params[i].p);
                run_case(&problem, inv_h, &params[i], quad_degree)
                    .with_context(|| format!("p = {}, 1/h = {inv_h}", params[i].p))
            })
            .collect::<anyhow::Result<_>>()
    })?;

    let mut files = Vec::new();
    let mut tables = Vec::new();
    let mut all_converged = true;
    let per_p = config.refinements.len();
    for (i, params) in params.iter().enumerate() {
        let stem = file_stem(&problem, params.p);
        let mut table = RateTable::new(params.p);
        let mut cases = Vec::new();
        for out in &outcomes[i * per_p..(i + 1) * per_p] {
            all_converged &= out.record.converged;
            table.push(out.record.clone())?;
            cases.push(case_log(out));
            if config.export_fields {
                let path = dir.join(format!("{stem}_h{}_eta.vtk", out.record.inv_h));
                export_field(&out.mesh, &out.eta, "eta_h", &path)?;
                files.push(path);
            }
        }
        let base = format!("{stem}_{}", refinement_tag(&config.refinements));
        let csv_path = dir.join(format!("{base}.csv"));
        write(&csv_path, &table.to_csv()?)?;
        let md_path = dir.join(format!("{base}.md"));
        write(&md_path, &format!("Example {}: {}\n\n{}", problem.id, problem.name, table.to_markdown()))?;
        let log = RunLog {
            example: problem.id,
            name: problem.name.clone(),
            gamma: problem.gamma,
            p: params.p,
            q: params.q,
            rho1: params.rho1,
            rho2: params.rho2,
            rho3: params.rho3,
            eps0: params.eps0,
            default_eps0: PdwgParams::default_eps0(params.p),
            tol: params.tol,
            max_iters: params.max_iters,
            quad_degree,
            cases,
        };
        let log_path = dir.join(format!("{base}.json"));
        write(&log_path, &serde_json::to_string_pretty(&log)?)?;
        files.extend([csv_path, md_path, log_path]);
        tables.push(table);
    }
    Ok(RunSummary { tables, files, all_converged })
}

/// Catalog description of an example.
pub fn describe(id: usize, gamma: Option<f64>) -> anyhow::Result<String> {
    Ok(example(id, gamma)?.description())
}

/// Rows of a table whose solve hit the iteration cap.
pub fn unconverged(table: &RateTable) -> Vec<&ErrorRecord> {
    table.records.iter().filter(|r| !r.converged).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_encode_example_and_p() {
        assert_eq!(file_stem(&example(1, None).unwrap(), 2.0), "ex1_p2");
        assert_eq!(file_stem(&example(2, None).unwrap(), 2.5), "ex2_p2.5");
        assert_eq!(file_stem(&example(4, Some(1.0)).unwrap(), 3.0), "ex4_g1.0000_p3");
        assert_eq!(refinement_tag(&[2, 4, 8]), "h2-8");
        assert_eq!(refinement_tag(&[4]), "h4");
    }
}
