//! Experiment configuration, read from a single JSON file.

use std::path::{Path, PathBuf};

use pdwg_core::assembly::PdwgParams;
use pdwg_core::problems::{example, ProblemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub rho3: Option<f64>,
    pub eps0: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub quad_degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: usize,
    /// Exponent of example 4.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub p: Vec<f64>,
    /// Values of `1/h`, increasing.
    pub refinements: Vec<usize>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub export_fields: bool,
}

pub const DEFAULT_QUAD_DEGREE: usize = pdwg_core::weakcalc::quadrature::DEFAULT_DEGREE;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn problem(&self) -> anyhow::Result<ProblemSpec> {
        Ok(example(self.example, self.gamma)?)
    }

    /// Checks the grid against the problem and every parameter set.
    pub fn validate(&self) -> anyhow::Result<()> {
        let problem = self.problem()?;
        anyhow::ensure!(!self.p.is_empty(), "p list is empty");
        anyhow::ensure!(!self.refinements.is_empty(), "refinement list is empty");
        anyhow::ensure!(
            self.refinements.windows(2).all(|w| w[0] < w[1]),
            "refinements must be strictly increasing"
        );
        for &inv_h in &self.refinements {
            anyhow::ensure!(inv_h > 0, "1/h must be positive");
            problem.refinement_for(inv_h)?;
        }
        for &p in &self.p {
            self.params(&problem, p)?;
        }
        if let Some(d) = self.overrides.quad_degree {
            anyhow::ensure!(d >= 1, "quadrature degree must be at least 1");
        }
        Ok(())
    }

    /// Catalog defaults at `p` with the overrides applied.
    pub fn params(&self, problem: &ProblemSpec, p: f64) -> anyhow::Result<PdwgParams> {
        let rho = problem.default_rho(p);
        let o = &self.overrides;
        let mut params = PdwgParams::new(p, o.rho1.unwrap_or(rho), o.rho2.unwrap_or(rho))?;
        params.rho3 = o.rho3.unwrap_or(params.rho3);
        params.eps0 = o.eps0.unwrap_or(params.eps0);
        params.tol = o.tol.unwrap_or(params.tol);
        params.max_iters = o.max_iters.unwrap_or(params.max_iters);
        params.validate()?;
        Ok(params)
    }

    pub fn quad_degree(&self) -> usize {
        self.overrides.quad_degree.unwrap_or(DEFAULT_QUAD_DEGREE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_json(r#"{"example": 1, "p": [2], "refinements": [2, 4]}"#).unwrap();
        assert_eq!(c.refinements, vec![2, 4]);
        assert!(!c.export_fields && c.output_dir.is_none());
        assert_eq!(c.quad_degree(), DEFAULT_QUAD_DEGREE);
    }

    #[test]
    fn overrides_replace_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"example": 1, "p": [3], "refinements": [2], "overrides": {"rho1": 5.0, "eps0": 1e-4, "max_iters": 7}}"#,
        )
        .unwrap();
        let params = c.params(&c.problem().unwrap(), 3.0).unwrap();
        assert_eq!((params.rho1, params.rho2, params.eps0, params.max_iters), (5.0, 900.0, 1e-4, 7));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            r#"{"example": 9, "p": [2], "refinements": [2]}"#,
            r#"{"example": 1, "p": [1.0], "refinements": [2]}"#,
            r#"{"example": 1, "p": [2], "refinements": [4, 2]}"#,
            r#"{"example": 1, "p": [2], "refinements": []}"#,
            r#"{"example": 3, "p": [2], "refinements": [1]}"#,
            r#"{"example": 1, "p": [2], "refinements": [2], "overrides": {"rho1": -1}}"#,
            r#"{"example": 1, "p": [2], "refinements": [2], "colour": "red"}"#,
            r#"{"example": 1, "p": [2]"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
