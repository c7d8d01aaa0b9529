//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::multiplex::GeometrySpec;
use crate::params::{Model, PhysicalParams};
use crate::schmidt::FrequencyGrid;
use crate::shaping::{ShapingProblem, SweepSpec};
use crate::spectral::EvaluatorConfig;

/// Largest rule the `eval` subcommand's adaptive quadrature may reach.
pub const DEFAULT_MAX_QUAD_NODES: usize = 25_600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// `[Δω_s, Δω_i]` pairs in Γ₃ units.
    pub points: Vec<[f64; 2]>,
    pub max_quad_nodes: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { points: vec![[0.0, 0.0]], max_quad_nodes: DEFAULT_MAX_QUAD_NODES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchmidtOptions {
    /// Leading modes written as CSV.
    pub mode_dumps: usize,
    /// Also run the kernel-eigenvalue route and report its agreement.
    pub kernel_check: bool,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        Self { mode_dumps: 4, kernel_check: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: PathBuf,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A complete run description. Every block is optional and defaults to room-temperature ⁸⁷Rb with the reference excitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physical_params: PhysicalParams,
    pub geometry: GeometrySpec,
    /// Grid for single decompositions and verification of sweep optima.
    pub grid: FrequencyGrid,
    /// Grid for sweep and optimizer points.
    pub sweep_grid: FrequencyGrid,
    pub evaluator: EvaluatorConfig,
    pub eval: EvalOptions,
    pub schmidt: SchmidtOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<ShapingProblem>,
    pub output: OutputOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physical_params: PhysicalParams::default(),
            geometry: GeometrySpec::default(),
            grid: FrequencyGrid::default(),
            sweep_grid: FrequencyGrid::sweep(),
            evaluator: EvaluatorConfig::default(),
            eval: EvalOptions::default(),
            schmidt: SchmidtOptions::default(),
            sweep: None,
            optimize: None,
            output: OutputOptions::default(),
        }
    }
}

impl RunConfig {
    /// Every violated constraint across all blocks, addressed by dotted path.
    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let mut nest = |block: &str, list: Vec<Issue>| issues.extend(list.into_iter().map(|i| i.nested(block)));
        let physical = self.physical_params.issues();
        let physical_ok = physical.is_empty();
        nest("physical_params", physical);
        nest("geometry", self.geometry.issues());
        nest("grid", self.grid.issues());
        nest("sweep_grid", self.sweep_grid.issues());
        nest("evaluator", self.evaluator.issues());
        if let Some(bad) = self.eval.points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            nest("eval", vec![Issue::new(format!("points[{bad}]"), "must be finite")]);
        }
        if let Some(sweep) = &self.sweep {
            nest("sweep", sweep.issues());
        }
        if let Some(problem) = &self.optimize {
            // Bounds depend on the Doppler margin, which needs valid physical parameters.
            let model = if physical_ok { Model::new(self.physical_params).ok() } else { None };
            let list = problem.issues(&self.sweep_grid, &model.unwrap_or_default());
            nest("optimize", list);
        }
        issues
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// One-line JSON embedded in every output file.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parses a config, reporting type and unknown-field errors with their JSON path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        Error::Validation(vec![Issue::new(path, e.into_inner().to_string())])
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Loads and fully validates a config, collecting every error.
pub fn validate_config(path: &Path) -> Result<RunConfig> {
    let config = load_config(path)?;
    config.validate()?;
    Ok(config)
}
