//! Canned runs that regenerate the data behind each figure.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cli_io::config::RunConfig;
use crate::cli_io::report::{write_heatmap_csv, write_json, write_table_csv, ResultBundle};
use crate::error::{Error, Result};
use crate::multiplex::{make_shifts, GeometryFamily, GeometrySpec};
use crate::params::Model;
use crate::schmidt::{build_jsa, schmidt_decompose, FrequencyGrid};
use crate::shaping::{evaluate_point, find_dip, run_sweep, Curve, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig3a,
    Fig3bcd,
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig2a, Preset::Fig2b, Preset::Fig2c, Preset::Fig3a, Preset::Fig3bcd, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig3a => "fig3a",
            Preset::Fig3bcd => "fig3bcd",
            Preset::Fig4 => "fig4",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::invalid("preset", format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Shift between neighboring cells used for the Fig. 2(c) maps and the Fig. 3(b–d) spectra.
pub const LARGE_DQ: f64 = 120.0;

/// Heatmap sampling: ±400Γ₃ at 2Γ₃ spacing.
pub fn heatmap_grid() -> FrequencyGrid {
    FrequencyGrid { half_width: 400.0, n_points: 401 }
}

/// Runs a preset with the physical parameters, grids and evaluator of `config`, writing into `out_dir`.
/// Returns every file written; the last is the JSON summary.
pub fn run_preset(preset: Preset, config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let start = Instant::now();
    let json = config.to_json_line();
    let mut files = Vec::new();
    let (result, warnings) = match preset {
        Preset::Fig2a => fig2a(config, out_dir, &json, &mut files)?,
        Preset::Fig2b => fig2b(config, out_dir, &json, &mut files)?,
        Preset::Fig2c => fig2c(config, out_dir, &json, &mut files)?,
        Preset::Fig3a => fig3a(config, out_dir, &json, &mut files)?,
        Preset::Fig3bcd => fig3bcd(config, out_dir, &json, &mut files)?,
        Preset::Fig4 => fig4(config, out_dir, &json, &mut files)?,
    };
    let bundle = ResultBundle::new(&format!("preset {}", preset.name()), config, result, warnings, start.elapsed());
    files.push(write_json(&out_dir.join(format!("{}_summary.json", preset.name())), &bundle)?);
    Ok(files)
}

type Outcome = (serde_json::Value, Vec<String>);

fn sweep_and_write(spec: &SweepSpec, config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>, prefix: &str) -> Result<Vec<Curve>> {
    let curves = run_sweep(spec, config.sweep_grid, &config.physical_params, &config.evaluator)?;
    for curve in &curves {
        let path = dir.join(format!("{prefix}_{}.csv", curve.label));
        files.push(crate::cli_io::report::write_file(&path, |out| curve.write_csv(out, Some(json)))?);
    }
    Ok(curves)
}

fn curve_warnings(curves: &[Curve]) -> Vec<String> {
    curves
        .iter()
        .flat_map(|c| c.points.iter().flat_map(move |p| p.warnings.iter().map(move |w| format!("{} at {}: {w}", c.label, p.param))))
        .collect()
}

fn dip_json(curve: &Curve) -> serde_json::Value {
    match find_dip(&curve.points) {
        Ok(dip) => serde_json::json!({ "dq": dip.param, "S": dip.entropy_s }),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

fn fig2a(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let curves = sweep_and_write(&SweepSpec::fig2a(), config, dir, json, files, "fig2a")?;
    let rows: Vec<serde_json::Value> = curves
        .iter()
        .map(|c| {
            let first = &c.points[0];
            let last = c.points.last().expect("nonempty curve");
            serde_json::json!({
                "label": c.label,
                "temperature": c.temperature,
                "S_at_dq0": first.entropy_s,
                "S_at_last_dq": last.entropy_s,
                "last_dq": last.param,
                "dip": dip_json(c),
            })
        })
        .collect();
    Ok((serde_json::json!({ "curves": rows }), curve_warnings(&curves)))
}

fn fig2b(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let curves = sweep_and_write(&SweepSpec::fig2b(), config, dir, json, files, "fig2b")?;
    let rows: Vec<serde_json::Value> = curves
        .iter()
        .map(|c| serde_json::json!({ "label": c.label, "family": c.family, "S_at_last_dq": c.points.last().map(|p| p.entropy_s) }))
        .collect();
    Ok((serde_json::json!({ "curves": rows }), curve_warnings(&curves)))
}

fn fig2c(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let model = Model::new(config.physical_params)?;
    let ev = config.evaluator.build(model)?;
    let grid = heatmap_grid();
    let axis = grid.points();
    let h2 = grid.spacing().powi(2);
    let mut warnings = Vec::new();
    let mut maps = Vec::new();
    for family in [GeometryFamily::AntiCorrelation, GeometryFamily::Correlation, GeometryFamily::IdlerAxis, GeometryFamily::SignalAxis] {
        let shifts = make_shifts(&GeometrySpec::line(family, LARGE_DQ, 2))?;
        let jsa = build_jsa(grid, &shifts, &ev)?;
        warnings.extend(jsa.warnings().iter().map(|w| format!("{family}: {w}")));
        let values = jsa.values();
        let path = dir.join(format!("fig2c_{family}.csv"));
        files.push(write_heatmap_csv(&path, &axis, &axis, |r, c| values[(r, c)].norm_sqr(), json)?);
        maps.push(serde_json::json!({ "family": family, "file": path, "mass": values.norm_l2().powi(2) * h2 }));
    }
    Ok((serde_json::json!({ "dq": LARGE_DQ, "grid": grid, "quantity": "|f_MP|^2 normalized to unit integral", "maps": maps }), warnings))
}

fn fig3a(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let curves = sweep_and_write(&SweepSpec::fig3a(), config, dir, json, files, "fig3a")?;
    let rows: Vec<serde_json::Value> = curves
        .iter()
        .flat_map(|c| {
            let dq = c.dq;
            c.points.iter().map(move |p| {
                serde_json::json!({ "dq": dq, "n_mp": p.param, "S": p.entropy_s, "K": p.schmidt_k, "K_exceeds_n_mp": p.schmidt_k > p.param })
            })
        })
        .collect();
    Ok((serde_json::json!({ "points": rows }), curve_warnings(&curves)))
}

/// Modes written per ensemble count.
const FIG3_MODES: usize = 4;
/// Weights written per ensemble count.
const FIG3_LAMBDAS: usize = 40;

fn fig3bcd(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let model = Model::new(config.physical_params)?;
    let ev = config.evaluator.build(model)?;
    let axis = config.grid.points();
    let mut header = vec!["n".to_string()];
    let mut columns = vec![(1..=FIG3_LAMBDAS).map(|n| n as f64).collect::<Vec<_>>()];
    let mut summary = Vec::new();
    let mut warnings = Vec::new();
    for n_mp in [2usize, 3] {
        let shifts = make_shifts(&GeometrySpec::line(GeometryFamily::AntiCorrelation, LARGE_DQ, n_mp))?;
        let jsa = build_jsa(config.grid, &shifts, &ev)?;
        warnings.extend(jsa.warnings().iter().map(|w| format!("N_MP={n_mp}: {w}")));
        let r = schmidt_decompose(&jsa)?;
        header.push(format!("lambda_N{n_mp}"));
        columns.push(r.lambdas.iter().take(FIG3_LAMBDAS).copied().collect());
        for k in 0..FIG3_MODES.min(r.lambdas.len()) {
            let psi: Vec<f64> = r.modes_s[k].iter().map(|z| z.norm_sqr()).collect();
            let phi: Vec<f64> = r.modes_i[k].iter().map(|z| z.norm_sqr()).collect();
            let path = dir.join(format!("fig3cd_N{n_mp}_mode{}.csv", k + 1));
            files.push(write_table_csv(&path, &["omega", "psi_abs2", "phi_abs2"], &[axis.clone(), psi, phi], json)?);
        }
        summary.push(serde_json::json!({ "n_mp": n_mp, "S": r.entropy_s, "K": r.schmidt_k, "lambda_head": &r.lambdas[..r.lambdas.len().min(8)] }));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(write_table_csv(&dir.join("fig3b_lambdas.csv"), &header, &columns, json)?);
    Ok((serde_json::json!({ "dq": LARGE_DQ, "spectra": summary }), warnings))
}

fn fig4(config: &RunConfig, dir: &Path, json: &str, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let curves = run_sweep(&SweepSpec::fig4(), config.sweep_grid, &config.physical_params, &config.evaluator)?;
    let mut header = vec!["dq".to_string()];
    let mut columns = vec![curves[0].params()];
    for c in &curves {
        header.push(format!("S_{}", short(c.family)));
        columns.push(c.entropies());
    }
    for c in &curves {
        header.push(format!("K_{}", short(c.family)));
        columns.push(c.points.iter().map(|p| p.schmidt_k).collect());
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(write_table_csv(&dir.join("fig4.csv"), &header, &columns, json)?);

    let mut dips = Vec::new();
    for c in &curves {
        let entry = match find_dip(&c.points) {
            Ok(dip) => {
                let geometry = GeometrySpec::shape(c.family, dip.param);
                let (s, k, w) = evaluate_point(&geometry, config.grid, &config.physical_params, &config.evaluator)?;
                serde_json::json!({
                    "family": c.family,
                    "dq": dip.param,
                    "S_sweep_grid": dip.entropy_s,
                    "S_verified": s,
                    "K_verified": k,
                    "verification_grid": config.grid,
                    "warnings": w,
                })
            }
            Err(e) => serde_json::json!({ "family": c.family, "error": e.to_string() }),
        };
        dips.push(entry);
    }
    Ok((serde_json::json!({ "dips": dips }), curve_warnings(&curves)))
}

fn short(family: GeometryFamily) -> &'static str {
    match family {
        GeometryFamily::PlusFour => "plus",
        GeometryFamily::CrossFour => "cross",
        GeometryFamily::Octagon => "star",
        other => other.name(),
    }
}
