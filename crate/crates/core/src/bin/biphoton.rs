use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use biphoton::cli_io::config::RunConfig;
use biphoton::cli_io::presets::{run_preset, Preset};
use biphoton::cli_io::report::{write_file, write_json, write_mode_csv, ResultBundle, SchmidtSummary};
use biphoton::cli_io::{load_config, validate_config};
use biphoton::multiplex::{f_multiplexed, make_shifts, GeometryFamily};
use biphoton::params::Model;
use biphoton::schmidt::{build_jsa, schmidt_decompose, schmidt_spectrum, schmidt_via_kernels};
use biphoton::shaping::{
    evaluate_point, find_dip, optimize_shifts, run_sweep, Constraint, Objective, ShapingProblem, SweepScenario, SweepSpec,
};
use biphoton::spectral::{
    f_cold, f_doppler_closed, f_doppler_quad_adaptive, EvaluatorKind, PropagationScheme, QuadEstimate, SpectralPoint,
};
use biphoton::{Complex64, Error, Issue, Result};

/// Doppler-broadened biphoton spectra from multiplexed thermal atomic ensembles.
///
/// All frequencies, detunings and shifts are in units of Γ₃.
#[derive(Debug, Parser)]
#[command(name = "biphoton", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; omitted blocks take the defaults
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Points per frequency axis (applies to both the decomposition and sweep grids)
    #[arg(long, global = true, value_name = "N")]
    grid_points: Option<usize>,
    /// Half-width of the frequency window (applies to both grids)
    #[arg(long, global = true, value_name = "W")]
    window: Option<f64>,
    #[arg(long, global = true, value_enum)]
    evaluator: Option<EvaluatorArg>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, global = true, value_name = "N")]
    quad_nodes: Option<usize>,
    /// Geometry family, e.g. anti_correlation, cross_four, octagon
    #[arg(long, global = true, value_name = "FAMILY")]
    geometry: Option<String>,
    #[arg(long, global = true)]
    dq: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    n_mp: Option<usize>,
    /// Vapor temperature in K
    #[arg(long, global = true, value_name = "K")]
    temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvaluatorArg {
    Closed,
    Quad,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Co,
    Counter,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    MinS,
    MaxK,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintArg {
    Free,
    Family,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print f_C, the closed-form f_D, the quadrature f_D and f_MP at spectral points as JSON
    Eval {
        /// Δω_s,Δω_i (repeatable)
        #[arg(long = "point", value_name = "DS,DI", value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<[f64; 2]>,
    },
    /// Schmidt decomposition of the configured geometry
    Schmidt {
        /// Number of leading modes to dump as CSV
        #[arg(long)]
        modes: Option<usize>,
        /// Cross-check against the kernel eigenproblems
        #[arg(long)]
        kernel_check: bool,
    },
    /// Run the configured sweep, or a figure's sweep
    Sweep {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
    /// Search shift placements that minimize S or maximize K
    Optimize {
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[arg(long, value_enum)]
        constraint: Option<ConstraintArg>,
        #[arg(long)]
        bounds: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Regenerate the data behind a figure
    Preset {
        /// fig2a, fig2b, fig2c, fig3a, fig3bcd or fig4
        name: String,
    },
    /// Check a configuration file and report every problem
    Validate,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected DS,DI, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([parse(a)?, parse(b)?])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.issues().len() > 1 {
                for issue in e.issues() {
                    eprintln!("  {issue}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Validate = cli.command {
        let path = cli.global.config.as_deref().ok_or_else(|| Error::invalid("--config", "validate needs a config file"))?;
        validate_config(path)?;
        println!("{}: valid", path.display());
        return Ok(());
    }

    let mut config = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, &cli.global, &cli.command)?;
    config.validate()?;
    let out = config.output.dir.clone();

    match cli.command {
        Command::Eval { .. } => eval(&config),
        Command::Schmidt { .. } => schmidt(&config, &out),
        Command::Sweep { .. } => sweep(&config, &out),
        Command::Optimize { .. } => optimize(&config, &out),
        Command::Preset { name } => {
            let preset: Preset = name.parse()?;
            let files = run_preset(preset, &config, &out)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Validate => unreachable!("handled above"),
    }
}

fn apply_overrides(config: &mut RunConfig, g: &GlobalArgs, command: &Command) -> Result<()> {
    if let Some(dir) = &g.out {
        config.output.dir = dir.clone();
    }
    for grid in [&mut config.grid, &mut config.sweep_grid] {
        if let Some(n) = g.grid_points {
            grid.n_points = n;
        }
        if let Some(w) = g.window {
            grid.half_width = w;
        }
    }
    if let Some(kind) = g.evaluator {
        config.evaluator.kind = match kind {
            EvaluatorArg::Closed => EvaluatorKind::Closed,
            EvaluatorArg::Quad => EvaluatorKind::Quad,
        };
    }
    if let Some(scheme) = g.scheme {
        config.evaluator.scheme = match scheme {
            SchemeArg::Co => PropagationScheme::CoPropagating,
            SchemeArg::Counter => PropagationScheme::CounterPropagating,
        };
    }
    if let Some(n) = g.quad_nodes {
        config.evaluator.quad_nodes = n;
    }
    if let Some(t) = g.temperature {
        config.physical_params.temperature = t;
    }
    if let Some(name) = &g.geometry {
        let family = GeometryFamily::from_name(name).ok_or_else(|| {
            let names: Vec<&str> = GeometryFamily::ALL.iter().map(|f| f.name()).collect();
            Error::invalid("geometry.family", format!("unknown family {name:?}; expected one of {}", names.join(", ")))
        })?;
        config.geometry.family = family;
        if family.fixed_n_mp().is_some() {
            config.geometry.n_mp = None;
        } else if config.geometry.n_mp.is_none() {
            config.geometry.n_mp = Some(2);
        }
        if family != GeometryFamily::Explicit {
            config.geometry.explicit_shifts = None;
        }
    }
    if let Some(dq) = g.dq {
        config.geometry.dq = dq;
    }
    if let Some(n) = g.n_mp {
        config.geometry.n_mp = Some(n);
    }

    match command {
        Command::Eval { points } if !points.is_empty() => config.eval.points = points.clone(),
        Command::Schmidt { modes, kernel_check } => {
            if let Some(m) = modes {
                config.schmidt.mode_dumps = *m;
            }
            config.schmidt.kernel_check |= *kernel_check;
        }
        Command::Sweep { scenario: Some(s) } => {
            config.sweep = Some(SweepSpec::preset(match s {
                ScenarioArg::Fig2a => SweepScenario::Fig2aTempFamily,
                ScenarioArg::Fig2b => SweepScenario::Fig2bDirectionFamily,
                ScenarioArg::Fig3a => SweepScenario::Fig3aNmpFamily,
                ScenarioArg::Fig4 => SweepScenario::Fig4ShapeFamily,
            }));
        }
        Command::Optimize { objective, constraint, bounds, budget } => {
            let any_flag = objective.is_some() || constraint.is_some() || bounds.is_some() || budget.is_some();
            if config.optimize.is_none() && any_flag {
                let n_mp = config.geometry.n_mp();
                config.optimize = Some(ShapingProblem::free(Objective::MinimizeS, n_mp, 300.0, 100));
            }
            if let Some(p) = config.optimize.as_mut() {
                if let Some(o) = objective {
                    p.objective = match o {
                        ObjectiveArg::MinS => Objective::MinimizeS,
                        ObjectiveArg::MaxK => Objective::MaximizeK,
                    };
                }
                if let Some(c) = constraint {
                    p.constraint = match c {
                        ConstraintArg::Free => Constraint::FreePlacement,
                        ConstraintArg::Family => Constraint::SymmetricFamily,
                    };
                }
                if p.constraint == Constraint::SymmetricFamily && p.family.is_none() {
                    p.family = Some(config.geometry.family);
                }
                if p.constraint == Constraint::FreePlacement {
                    p.family = None;
                }
                if let Some(b) = bounds {
                    p.bounds = *b;
                }
                if let Some(b) = budget {
                    p.budget = *b;
                }
            }
        }
        _ => {}
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    point: [f64; 2],
    f_cold: Complex64,
    /// Absent for counter-propagating excitation.
    f_doppler_closed: Option<Complex64>,
    f_doppler_quad: QuadEstimate,
    /// Sum over the configured geometry with the configured evaluator.
    f_multiplexed: Complex64,
}

fn eval(config: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let model = Model::new(config.physical_params)?;
    let ev = config.evaluator.build(model)?;
    let shifts = make_shifts(&config.geometry)?;
    let scheme = config.evaluator.scheme;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &[ds, di] in &config.eval.points {
        let p = SpectralPoint::new(ds, di);
        let quad = f_doppler_quad_adaptive(&model, p, scheme, config.evaluator.quad_nodes, config.eval.max_quad_nodes)?;
        if !quad.converged {
            warnings.push(format!(
                "quadrature at ({ds}, {di}) changed by {:.2e} on the last doubling ({} nodes)",
                quad.relative_change, quad.nodes
            ));
        }
        rows.push(EvalRow {
            point: [ds, di],
            f_cold: f_cold(&model, p),
            f_doppler_closed: (scheme == PropagationScheme::CoPropagating).then(|| f_doppler_closed(&model, p)),
            f_doppler_quad: quad,
            f_multiplexed: f_multiplexed(&ev, p, &shifts),
        });
    }
    let unconverged = !warnings.is_empty();
    let bundle = ResultBundle::new("eval", config, rows, warnings, start.elapsed());
    println!("{}", serde_json::to_string_pretty(&bundle).map_err(|e| Error::Serialize(e.to_string()))?);
    if unconverged {
        return Err(Error::Convergence("velocity quadrature did not reach the doubling tolerance".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SchmidtOutput {
    #[serde(flatten)]
    summary: SchmidtSummary,
    shifts: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel_check: Option<KernelCheck>,
}

#[derive(Serialize)]
struct KernelCheck {
    max_abs_lambda_difference: f64,
    hermiticity_residual: f64,
}

fn schmidt(config: &RunConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let model = Model::new(config.physical_params)?;
    let ev = config.evaluator.build(model)?;
    let shifts = make_shifts(&config.geometry)?;
    let jsa = build_jsa(config.grid, &shifts, &ev)?;
    let result = if config.schmidt.mode_dumps > 0 { schmidt_decompose(&jsa)? } else { schmidt_spectrum(&jsa)? };
    let check = if config.schmidt.kernel_check {
        let k = schmidt_via_kernels(&jsa, 0)?;
        let n = result.lambdas.len().max(k.result.lambdas.len());
        let diff = (0..n)
            .map(|i| (result.lambdas.get(i).unwrap_or(&0.0) - k.result.lambdas.get(i).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max);
        Some(KernelCheck { max_abs_lambda_difference: diff, hermiticity_residual: k.hermiticity_residual })
    } else {
        None
    };

    let json = config.to_json_line();
    let axis = config.grid.points();
    let mut files = Vec::new();
    for k in 0..config.schmidt.mode_dumps.min(result.modes_s.len()) {
        files.push(write_mode_csv(&out.join(format!("mode_s_{k}.csv")), &axis, &result.modes_s[k], &json)?);
        files.push(write_mode_csv(&out.join(format!("mode_i_{k}.csv")), &axis, &result.modes_i[k], &json)?);
    }
    let output = SchmidtOutput {
        summary: SchmidtSummary::new(&result, config.grid),
        shifts: shifts.iter().map(|s| [s.ds, s.di]).collect(),
        kernel_check: check,
    };
    let bundle = ResultBundle::new("schmidt", config, output, jsa.warnings().to_vec(), start.elapsed());
    files.push(write_json(&out.join("schmidt.json"), &bundle)?);
    for w in jsa.warnings() {
        eprintln!("warning: {w}");
    }
    println!("S = {:.6} bits, K = {:.6} ({} weights retained)", result.entropy_s, result.schmidt_k, result.lambdas.len());
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn sweep(config: &RunConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let spec = config.sweep.clone().ok_or_else(|| {
        Error::Validation(vec![Issue::new("sweep", "no sweep block in the config; pass --scenario")])
    })?;
    let curves = run_sweep(&spec, config.sweep_grid, &config.physical_params, &config.evaluator)?;
    let json = config.to_json_line();
    let mut files = Vec::new();
    let mut summary = Vec::new();
    let mut warnings = Vec::new();
    for curve in &curves {
        let path = out.join(format!("sweep_{}.csv", curve.label));
        files.push(write_file(&path, |w| curve.write_csv(w, Some(&json)))?);
        let dip = match find_dip(&curve.points) {
            Ok(d) => serde_json::to_value(d).map_err(|e| Error::Serialize(e.to_string()))?,
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        summary.push(serde_json::json!({ "label": curve.label, "file": path, "dip": dip }));
        for p in &curve.points {
            warnings.extend(p.warnings.iter().map(|w| format!("{} at {}: {w}", curve.label, p.param)));
        }
    }
    let bundle = ResultBundle::new("sweep", config, serde_json::json!({ "curves": summary }), warnings, start.elapsed());
    files.push(write_json(&out.join("sweep.json"), &bundle)?);
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct OptimizeOutput {
    #[serde(flatten)]
    outcome: biphoton::shaping::OptimizeOutcome,
    /// S and K of the best placement re-evaluated on the decomposition grid.
    verified: serde_json::Value,
}

fn optimize(config: &RunConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let problem = config.optimize.clone().ok_or_else(|| {
        Error::Validation(vec![Issue::new("optimize", "no optimize block in the config; pass --objective or --constraint")])
    })?;
    let outcome = optimize_shifts(&problem, config.sweep_grid, &config.physical_params, &config.evaluator)?;
    let geometry = biphoton::multiplex::GeometrySpec::explicit(outcome.best.shifts().to_vec());
    let (s, k, w) = evaluate_point(&geometry, config.grid, &config.physical_params, &config.evaluator)?;
    let verified = serde_json::json!({ "grid": config.grid, "S": s, "K": k, "warnings": w });
    let mut warnings = Vec::new();
    if outcome.budget_exhausted {
        warnings.push(format!("budget of {} evaluations exhausted; returning the best placement found", problem.budget));
    }
    println!(
        "best S = {:.6}, K = {:.6} after {} evaluations{}",
        outcome.entropy_s,
        outcome.schmidt_k,
        outcome.evaluations,
        if outcome.budget_exhausted { " (budget exhausted)" } else { "" }
    );
    let bundle = ResultBundle::new("optimize", config, OptimizeOutput { outcome, verified }, warnings, start.elapsed());
    let path = write_json(&out.join("optimize.json"), &bundle)?;
    println!("wrote {}", path.display());
    Ok(())
}
