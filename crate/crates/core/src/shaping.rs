//! Parameter sweeps over multiplexing geometries, dip location, and a
//! budgeted pattern search for shift placements that lower or raise the
//! spectral entanglement.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::error::{Error, Issue, Result};
use crate::multiplex::{make_shifts, GeometryFamily, GeometrySpec, Shift, ShiftSet};
use crate::params::{Model, PhysicalParams};
use crate::schmidt::{build_jsa, schmidt_spectrum, FrequencyGrid};
use crate::spectral::EvaluatorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScenario {
    /// Anti-correlated pair at several temperatures, S against dq.
    Fig2aTempFamily,
    /// Pair along each of the four directions, S against dq.
    Fig2bDirectionFamily,
    /// Anti-correlated line, S and K against the ensemble count.
    Fig3aNmpFamily,
    /// Four- and eight-cell shapes, S against dq.
    Fig4ShapeFamily,
    Custom,
}

/// The swept parameter of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dq,
    NMp,
}

/// The `sweep` config block. Empty lists in a named scenario take that scenario's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scenario: SweepScenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(default)]
    pub families: Vec<GeometryFamily>,
    #[serde(default)]
    pub dq_values: Vec<f64>,
    #[serde(default)]
    pub temperatures: Vec<f64>,
    #[serde(default)]
    pub n_mp_values: Vec<usize>,
}

/// `start, start + step, …` up to and including `stop`.
pub fn stepped(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

impl SweepSpec {
    pub fn preset(scenario: SweepScenario) -> Self {
        use GeometryFamily::*;
        let dq = stepped(0.0, 200.0, 5.0);
        let (families, dq_values, temperatures, n_mp_values) = match scenario {
            SweepScenario::Fig2aTempFamily => (vec![AntiCorrelation], dq, vec![100.0, 300.0, 500.0], vec![2]),
            SweepScenario::Fig2bDirectionFamily => {
                (vec![AntiCorrelation, Correlation, SignalAxis, IdlerAxis], dq, vec![300.0], vec![2])
            }
            SweepScenario::Fig3aNmpFamily => (vec![AntiCorrelation], vec![30.0, 60.0, 120.0], vec![300.0], (1..=6).collect()),
            SweepScenario::Fig4ShapeFamily => (vec![PlusFour, CrossFour, Octagon], dq, vec![300.0], Vec::new()),
            SweepScenario::Custom => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
        };
        Self { scenario, axis: None, families, dq_values, temperatures, n_mp_values }
    }

    pub fn fig2a() -> Self {
        Self::preset(SweepScenario::Fig2aTempFamily)
    }

    pub fn fig2b() -> Self {
        Self::preset(SweepScenario::Fig2bDirectionFamily)
    }

    pub fn fig3a() -> Self {
        Self::preset(SweepScenario::Fig3aNmpFamily)
    }

    pub fn fig4() -> Self {
        Self::preset(SweepScenario::Fig4ShapeFamily)
    }

    /// Fills empty lists from the named scenario.
    pub fn resolved(&self) -> Self {
        let preset = Self::preset(self.scenario);
        let pick = |own: &Vec<f64>, default: Vec<f64>| if own.is_empty() { default } else { own.clone() };
        Self {
            scenario: self.scenario,
            axis: Some(self.axis()),
            families: if self.families.is_empty() { preset.families } else { self.families.clone() },
            dq_values: pick(&self.dq_values, preset.dq_values),
            temperatures: pick(&self.temperatures, preset.temperatures),
            n_mp_values: if self.n_mp_values.is_empty() { preset.n_mp_values } else { self.n_mp_values.clone() },
        }
    }

    pub fn axis(&self) -> SweepAxis {
        self.axis.unwrap_or(match self.scenario {
            SweepScenario::Fig3aNmpFamily => SweepAxis::NMp,
            _ => SweepAxis::Dq,
        })
    }

    pub fn issues(&self) -> Vec<Issue> {
        let spec = self.resolved();
        let axis = spec.axis();
        let mut issues = Vec::new();
        if spec.families.is_empty() {
            issues.push(Issue::new("families", "must list at least one geometry family"));
        }
        for (k, family) in spec.families.iter().enumerate() {
            if *family == GeometryFamily::Explicit {
                issues.push(Issue::new(format!("families[{k}]"), "explicit geometries have no dq to sweep"));
            } else if axis == SweepAxis::NMp && family.fixed_n_mp().is_some() {
                issues.push(Issue::new(format!("families[{k}]"), format!("{family} has a fixed ensemble count")));
            }
        }
        if spec.dq_values.is_empty() {
            issues.push(Issue::new("dq_values", "must not be empty"));
        }
        if let Some(bad) = spec.dq_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            issues.push(Issue::new("dq_values", format!("must be finite and nonnegative, got {bad}")));
        }
        if spec.dq_values.windows(2).any(|w| w[1] <= w[0]) {
            issues.push(Issue::new("dq_values", "must be strictly ascending"));
        }
        if spec.temperatures.is_empty() {
            issues.push(Issue::new("temperatures", "must not be empty"));
        }
        for (k, t) in spec.temperatures.iter().enumerate() {
            for issue in PhysicalParams::default().with_temperature(*t).issues() {
                if issue.path == "temperature" {
                    issues.push(Issue::new(format!("temperatures[{k}]"), issue.reason));
                }
            }
        }
        let needs_n_mp = axis == SweepAxis::NMp || spec.families.iter().any(|f| f.fixed_n_mp().is_none());
        if needs_n_mp && spec.n_mp_values.is_empty() {
            issues.push(Issue::new("n_mp_values", "must not be empty"));
        }
        if spec.n_mp_values.contains(&0) {
            issues.push(Issue::new("n_mp_values", "ensemble counts must be at least 1"));
        }
        if axis == SweepAxis::NMp && spec.n_mp_values.windows(2).any(|w| w[1] <= w[0]) {
            issues.push(Issue::new("n_mp_values", "must be strictly ascending when swept"));
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

    /// One entry per output curve, in output order.
    fn curves(&self) -> Vec<CurveTemplate> {
        let spec = self.resolved();
        let mut out = Vec::new();
        for &temperature in &spec.temperatures {
            for &family in &spec.families {
                match spec.axis() {
                    SweepAxis::Dq => {
                        let counts = match family.fixed_n_mp() {
                            Some(n) => vec![n],
                            None => spec.n_mp_values.clone(),
                        };
                        for n_mp in counts {
                            let points = spec.dq_values.iter().map(|&dq| (dq, geometry(family, dq, n_mp))).collect();
                            out.push(CurveTemplate { family, temperature, axis: SweepAxis::Dq, n_mp: Some(n_mp), dq: None, points });
                        }
                    }
                    SweepAxis::NMp => {
                        for &dq in &spec.dq_values {
                            let points = spec.n_mp_values.iter().map(|&n| (n as f64, geometry(family, dq, n))).collect();
                            out.push(CurveTemplate { family, temperature, axis: SweepAxis::NMp, n_mp: None, dq: Some(dq), points });
                        }
                    }
                }
            }
        }
        out
    }
}

fn geometry(family: GeometryFamily, dq: f64, n_mp: usize) -> GeometrySpec {
    match family.fixed_n_mp() {
        Some(_) => GeometrySpec::shape(family, dq),
        None => GeometrySpec::line(family, dq, n_mp),
    }
}

struct CurveTemplate {
    family: GeometryFamily,
    temperature: f64,
    axis: SweepAxis,
    n_mp: Option<usize>,
    dq: Option<f64>,
    points: Vec<(f64, GeometrySpec)>,
}

impl CurveTemplate {
    fn label(&self) -> String {
        let fixed = match (self.axis, self.n_mp, self.dq) {
            (SweepAxis::Dq, Some(n), _) if self.family.fixed_n_mp().is_none() => format!("_n{n}"),
            (SweepAxis::NMp, _, Some(dq)) => format!("_dq{dq}"),
            _ => String::new(),
        };
        format!("{}_T{}{}", self.family, self.temperature, fixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    /// dq in Γ₃ units, or the ensemble count.
    pub param: f64,
    #[serde(rename = "S")]
    pub entropy_s: f64,
    #[serde(rename = "K")]
    pub schmidt_k: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub label: String,
    pub family: GeometryFamily,
    pub temperature: f64,
    pub axis: SweepAxis,
    /// Held fixed along a dq curve.
    pub n_mp: Option<usize>,
    /// Held fixed along an ensemble-count curve.
    pub dq: Option<f64>,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.entropy_s).collect()
    }

    /// The point whose parameter equals `param`, if sampled.
    pub fn at(&self, param: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.param == param)
    }

    /// `param,S,K,warnings` rows, preceded by a `# config:` line when given.
    pub fn write_csv<W: Write>(&self, mut out: W, config_comment: Option<&str>) -> std::io::Result<()> {
        if let Some(comment) = config_comment {
            writeln!(out, "# config: {comment}")?;
        }
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(["param", "S", "K", "warnings"])?;
        for p in &self.points {
            csv.write_record([p.param.to_string(), p.entropy_s.to_string(), p.schmidt_k.to_string(), p.warnings.join("; ")])?;
        }
        csv.flush()
    }
}

/// S and K for one geometry at one temperature.
pub fn evaluate_point(
    geometry: &GeometrySpec,
    grid: FrequencyGrid,
    physical: &PhysicalParams,
    evaluator: &EvaluatorConfig,
) -> Result<(f64, f64, Vec<String>)> {
    let model = Model::new(*physical)?;
    let ev = evaluator.build(model)?;
    let shifts = make_shifts(geometry)?;
    let jsa = build_jsa(grid, &shifts, &ev)?;
    let r = schmidt_spectrum(&jsa)?;
    Ok((r.entropy_s, r.schmidt_k, jsa.warnings().to_vec()))
}

/// Evaluates every point of every curve. Points run concurrently; output keeps spec order.
pub fn run_sweep(
    spec: &SweepSpec,
    grid: FrequencyGrid,
    base: &PhysicalParams,
    evaluator: &EvaluatorConfig,
) -> Result<Vec<Curve>> {
    spec.validate()?;
    let issues: Vec<Issue> = grid
        .issues()
        .into_iter()
        .map(|i| i.nested("grid"))
        .chain(evaluator.issues().into_iter().map(|i| i.nested("evaluator")))
        .collect();
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    let templates = spec.curves();
    let tasks: Vec<(usize, f64, &GeometrySpec, f64)> = templates
        .iter()
        .enumerate()
        .flat_map(|(c, t)| t.points.iter().map(move |(param, g)| (c, *param, g, t.temperature)))
        .collect();
    let results: Vec<Result<CurvePoint>> = tasks
        .par_iter()
        .map(|&(_, param, g, temperature)| {
            let (entropy_s, schmidt_k, warnings) = evaluate_point(g, grid, &base.with_temperature(temperature), evaluator)?;
            Ok(CurvePoint { param, entropy_s, schmidt_k, warnings })
        })
        .collect();

    let mut curves: Vec<Curve> = templates
        .iter()
        .map(|t| Curve {
            label: t.label(),
            family: t.family,
            temperature: t.temperature,
            axis: t.axis,
            n_mp: t.n_mp,
            dq: t.dq,
            points: Vec::with_capacity(t.points.len()),
        })
        .collect();
    for (&(c, ..), point) in tasks.iter().zip(results) {
        curves[c].points.push(point?);
    }
    Ok(curves)
}

/// Samples needed before a dip is located.
pub const MIN_DIP_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dip {
    pub param: f64,
    #[serde(rename = "S")]
    pub entropy_s: f64,
    /// Index of the smallest sample.
    pub sample_index: usize,
}

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum DipError {
    #[error("curve has {0} points; locating a dip needs at least {MIN_DIP_POINTS}")]
    TooFewPoints(usize),
    #[error("no interior minimum: smallest S = {value} is at the boundary sample {param}")]
    Boundary { param: f64, value: f64 },
}

impl From<DipError> for Error {
    fn from(e: DipError) -> Self {
        Error::Convergence(e.to_string())
    }
}

/// Interior minimum of S, refined by the vertex of the parabola through the smallest sample and its neighbors.
pub fn find_dip(curve: &[CurvePoint]) -> Result<Dip, DipError> {
    if curve.len() < MIN_DIP_POINTS {
        return Err(DipError::TooFewPoints(curve.len()));
    }
    let k = (0..curve.len()).fold(0, |best, j| if curve[j].entropy_s < curve[best].entropy_s { j } else { best });
    if k == 0 || k == curve.len() - 1 {
        return Err(DipError::Boundary { param: curve[k].param, value: curve[k].entropy_s });
    }
    let (x0, x1, x2) = (curve[k - 1].param, curve[k].param, curve[k + 1].param);
    let (y0, y1, y2) = (curve[k - 1].entropy_s, curve[k].entropy_s, curve[k + 1].entropy_s);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    // A flat or concave triple (or a NaN curvature) has no vertex to refine.
    if a.is_nan() || a <= 0.0 {
        return Ok(Dip { param: x1, entropy_s: y1, sample_index: k });
    }
    let vertex = (0.5 * (x0 + x1 - d01 / a)).clamp(x0, x2);
    let value = y0 + (vertex - x0) * d01 + a * (vertex - x0) * (vertex - x1);
    Ok(Dip { param: vertex, entropy_s: value, sample_index: k })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinimizeS,
    MaximizeK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Every shift coordinate moves independently.
    FreePlacement,
    /// Only the scale dq of one family moves.
    SymmetricFamily,
}

pub const MIN_BUDGET: usize = 50;

/// The `optimize` config block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingProblem {
    pub objective: Objective,
    pub n_mp: usize,
    pub constraint: Constraint,
    /// Geometry family for the symmetric constraint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GeometryFamily>,
    /// Every shift coordinate stays within `[-bounds, bounds]` (Γ₃ units).
    pub bounds: f64,
    pub budget: usize,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    /// Extra starting placements for the free constraint, tried after the built-in ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<Vec<Shift>>,
    /// Extra starting scales for the symmetric constraint.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seed_dq: Vec<f64>,
}

fn default_initial_step() -> f64 {
    8.0
}

fn default_min_step() -> f64 {
    0.5
}

impl ShapingProblem {
    pub fn free(objective: Objective, n_mp: usize, bounds: f64, budget: usize) -> Self {
        Self {
            objective,
            n_mp,
            constraint: Constraint::FreePlacement,
            family: None,
            bounds,
            budget,
            initial_step: default_initial_step(),
            min_step: default_min_step(),
            seeds: Vec::new(),
            seed_dq: Vec::new(),
        }
    }

    pub fn symmetric(objective: Objective, family: GeometryFamily, n_mp: usize, bounds: f64, budget: usize) -> Self {
        Self { constraint: Constraint::SymmetricFamily, family: Some(family), ..Self::free(objective, n_mp, bounds, budget) }
    }

    /// Checks the problem against the grid it will be evaluated on.
    pub fn issues(&self, grid: &FrequencyGrid, model: &Model) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.n_mp == 0 {
            issues.push(Issue::new("n_mp", "must be at least 1"));
        }
        if self.budget < MIN_BUDGET {
            issues.push(Issue::new("budget", format!("must be at least {MIN_BUDGET}, got {}", self.budget)));
        }
        let limit = grid.half_width - model.doppler_margin();
        if !(self.bounds.is_finite() && self.bounds > 0.0 && self.bounds <= limit) {
            issues.push(Issue::new(
                "bounds",
                format!(
                    "must lie in (0, {limit:.2}] (window {} minus Doppler margin {:.2}), got {}",
                    grid.half_width,
                    model.doppler_margin(),
                    self.bounds
                ),
            ));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0 && self.min_step <= self.initial_step) {
            issues.push(Issue::new("initial_step", "steps must be positive with min_step <= initial_step"));
        }
        match (self.constraint, self.family) {
            (Constraint::SymmetricFamily, None) => issues.push(Issue::new("family", "required for symmetric_family")),
            (Constraint::SymmetricFamily, Some(GeometryFamily::Explicit)) => {
                issues.push(Issue::new("family", "explicit geometries have no dq to search"))
            }
            (Constraint::SymmetricFamily, Some(f)) => {
                if let Some(n) = f.fixed_n_mp().filter(|&n| n != self.n_mp) {
                    issues.push(Issue::new("n_mp", format!("{f} places exactly {n} ensembles, got n_mp = {}", self.n_mp)));
                }
            }
            (Constraint::FreePlacement, Some(_)) => {
                issues.push(Issue::new("family", "only used with symmetric_family"));
            }
            (Constraint::FreePlacement, None) => {}
        }
        for (k, seed) in self.seeds.iter().enumerate() {
            if seed.len() != self.n_mp {
                issues.push(Issue::new(format!("seeds[{k}]"), format!("has {} shifts, expected {}", seed.len(), self.n_mp)));
            } else if seed.iter().any(|s| !(s.ds.abs() <= self.bounds && s.di.abs() <= self.bounds)) {
                issues.push(Issue::new(format!("seeds[{k}]"), "lies outside the bounds"));
            }
        }
        if let Some(bad) = self.seed_dq.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            issues.push(Issue::new("seed_dq", format!("must be finite and nonnegative, got {bad}")));
        }
        issues
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub shifts: Vec<Shift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dq: Option<f64>,
    #[serde(rename = "S")]
    pub entropy_s: f64,
    #[serde(rename = "K")]
    pub schmidt_k: f64,
    /// Minimized quantity: S, or −K.
    pub objective: f64,
    /// Step size in effect, or 0 for seeds.
    pub step: f64,
    pub improved: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutcome {
    pub best: ShiftSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_dq: Option<f64>,
    #[serde(rename = "S")]
    pub entropy_s: f64,
    #[serde(rename = "K")]
    pub schmidt_k: f64,
    pub evaluations: usize,
    /// The budget ran out before the step fell below `min_step`.
    pub budget_exhausted: bool,
    pub trace: Vec<TraceEntry>,
}

/// Maps search coordinates to shift placements.
enum Space {
    Free { n_mp: usize, bounds: f64 },
    Family { spec: GeometrySpec, dq_max: f64 },
}

impl Space {
    fn dim(&self) -> usize {
        match self {
            Space::Free { n_mp, .. } => 2 * n_mp,
            Space::Family { .. } => 1,
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Space::Free { bounds, .. } => x.iter().all(|c| c.abs() <= *bounds),
            Space::Family { dq_max, .. } => x[0] >= 0.0 && x[0] <= *dq_max,
        }
    }

    fn shifts(&self, x: &[f64]) -> Result<ShiftSet> {
        match self {
            Space::Free { .. } => ShiftSet::new(x.chunks(2).map(|c| Shift::new(c[0], c[1])).collect()),
            Space::Family { spec, .. } => make_shifts(&spec.with_dq(x[0])),
        }
    }

    fn dq(&self, x: &[f64]) -> Option<f64> {
        match self {
            Space::Free { .. } => None,
            Space::Family { .. } => Some(x[0]),
        }
    }
}

/// Starting placements taken from the hand-designed reference geometries.
fn reference_seeds(objective: Objective, n_mp: usize) -> Vec<GeometrySpec> {
    use GeometryFamily::*;
    let dq = match objective {
        Objective::MinimizeS => 30.0,
        Objective::MaximizeK => 120.0,
    };
    let mut seeds = vec![GeometrySpec::line(AntiCorrelation, dq, n_mp)];
    match (objective, n_mp) {
        (Objective::MinimizeS, 4) => {
            for dq in [30.0, 40.0] {
                seeds.push(GeometrySpec::shape(PlusFour, dq));
                seeds.push(GeometrySpec::shape(CrossFour, dq));
            }
        }
        (Objective::MinimizeS, 8) => {
            seeds.push(GeometrySpec::shape(Octagon, 40.0));
            seeds.push(GeometrySpec::shape(Octagon, 50.0));
        }
        (Objective::MaximizeK, 4) => seeds.push(GeometrySpec::shape(PlusFour, 200.0)),
        _ => {}
    }
    seeds
}

/// Compass search with step halving, seeded from the reference geometries.
///
/// Seeds are evaluated first, in order, and the best becomes the base point.
/// Each poll tries `±step` along every coordinate in turn and moves to the
/// first improvement; a poll without improvement halves the step. The search
/// ends when the step drops below `min_step` or the budget is spent.
///
/// The idler Lorentzian wings reach the window edge, so S on a fixed window
/// drifts by ~1e-3 per 10Γ₃ of common displacement. Wide bounds let the
/// search exploit that drift; keep them well inside the window.
pub fn optimize_shifts(
    problem: &ShapingProblem,
    grid: FrequencyGrid,
    physical: &PhysicalParams,
    evaluator: &EvaluatorConfig,
) -> Result<OptimizeOutcome> {
    let model = Model::new(*physical)?;
    let mut issues: Vec<Issue> = grid.issues().into_iter().map(|i| i.nested("grid")).collect();
    issues.extend(problem.issues(&grid, &model));
    issues.extend(evaluator.issues().into_iter().map(|i| i.nested("evaluator")));
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    let ev = evaluator.build(model)?;

    let space = match (problem.constraint, problem.family) {
        (Constraint::SymmetricFamily, Some(family)) => {
            let spec = geometry(family, 1.0, problem.n_mp);
            let unit = make_shifts(&spec)?.extent();
            let dq_max = if unit > 0.0 { problem.bounds / unit } else { problem.bounds };
            Space::Family { spec, dq_max }
        }
        _ => Space::Free { n_mp: problem.n_mp, bounds: problem.bounds },
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    match &space {
        Space::Free { n_mp, .. } => {
            for g in reference_seeds(problem.objective, *n_mp) {
                let shifts = make_shifts(&g)?;
                starts.push(shifts.iter().flat_map(|s| [s.ds, s.di]).collect());
            }
            starts.extend(problem.seeds.iter().map(|seed| seed.iter().flat_map(|s| [s.ds, s.di]).collect()));
            if *n_mp == 1 {
                starts.insert(0, vec![0.0, 0.0]);
            }
        }
        Space::Family { dq_max, .. } => {
            let reference = match problem.objective {
                Objective::MinimizeS => vec![30.0, 40.0],
                Objective::MaximizeK => vec![120.0, *dq_max],
            };
            starts.extend(reference.into_iter().chain(problem.seed_dq.iter().copied()).map(|d| vec![d.min(*dq_max)]));
        }
    }
    starts.retain(|x| space.contains(x));
    starts.dedup();
    if starts.is_empty() {
        starts.push(vec![0.0; space.dim()]);
    }

    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut evaluate = |x: &[f64], step: f64, best: f64| -> Result<Option<f64>> {
        if trace.len() >= problem.budget {
            return Ok(None);
        }
        let shifts = space.shifts(x)?;
        let jsa = build_jsa(grid, &shifts, &ev)?;
        let r = schmidt_spectrum(&jsa)?;
        let objective = match problem.objective {
            Objective::MinimizeS => r.entropy_s,
            Objective::MaximizeK => -r.schmidt_k,
        };
        trace.push(TraceEntry {
            evaluation: trace.len(),
            shifts: shifts.shifts().to_vec(),
            dq: space.dq(x),
            entropy_s: r.entropy_s,
            schmidt_k: r.schmidt_k,
            objective,
            step,
            improved: objective < best,
            warnings: jsa.warnings().to_vec(),
        });
        Ok(Some(objective))
    };

    let mut best_x = starts[0].clone();
    let mut best_f = f64::INFINITY;
    let mut exhausted = false;
    for x in &starts {
        match evaluate(x, 0.0, best_f)? {
            Some(f) if f < best_f => {
                best_f = f;
                best_x = x.clone();
            }
            Some(_) => {}
            None => {
                exhausted = true;
                break;
            }
        }
    }

    let mut step = problem.initial_step;
    'search: while !exhausted && step >= problem.min_step {
        let mut moved = false;
        'poll: for k in 0..space.dim() {
            for sign in [1.0, -1.0] {
                let mut candidate = best_x.clone();
                candidate[k] += sign * step;
                if !space.contains(&candidate) {
                    continue;
                }
                match evaluate(&candidate, step, best_f)? {
                    Some(f) if f < best_f => {
                        best_f = f;
                        best_x = candidate;
                        moved = true;
                        break 'poll;
                    }
                    Some(_) => {}
                    None => {
                        exhausted = true;
                        break 'search;
                    }
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }

    let best_entry = trace
        .iter()
        .rfind(|t| t.objective == best_f)
        .cloned()
        .ok_or_else(|| Error::Convergence("optimizer made no evaluations".into()))?;
    Ok(OptimizeOutcome {
        best: space.shifts(&best_x)?,
        best_dq: space.dq(&best_x),
        entropy_s: best_entry.entropy_s,
        schmidt_k: best_entry.schmidt_k,
        evaluations: trace.len(),
        budget_exhausted: exhausted,
        trace,
    })
}
