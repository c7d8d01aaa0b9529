//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! on any failure that is not a documented, frozen deviation.
//!
//! Run with `cargo test -p biphoton --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use biphoton::multiplex::{make_shifts, GeometryFamily, GeometrySpec, ShiftSet};
use biphoton::params::{Model, PhysicalParams};
use biphoton::schmidt::{
    build_jsa, convergence_check, entropy, schmidt_number, schmidt_spectrum, schmidt_via_kernels, FrequencyGrid,
    JointSpectralMatrix, Scenario, SchmidtResult,
};
use biphoton::shaping::{find_dip, run_sweep, Curve, SweepSpec};
use biphoton::spectral::{
    f_doppler_closed, f_doppler_quad_adaptive, faddeeva::faddeeva_w, faddeeva::scaled_erfi_term, Evaluator,
    EvaluatorConfig, PropagationScheme, SpectralPoint,
};
use biphoton::Complex64;

// Criterion 1
const FIG4_PLUS_CROSS_S: f64 = 0.75;
const FIG4_PLUS_CROSS_DQ: f64 = 30.0;
const FIG4_OCTAGON_S: f64 = 0.7;
const FIG4_OCTAGON_DQ: f64 = 40.0;
const FIG4_S_TOL: f64 = 0.15;
const FIG4_DQ_TOL: f64 = 15.0;

// Criterion 2
const ANTI4_DQ: f64 = 30.0;
const ANTI4_S: f64 = 2.0;
const ANTI4_S_TOL: f64 = 0.3;

// Criterion 3
const CAPACITY_LARGE_DQ: f64 = 120.0;
const CAPACITY_SMALL_DQ: f64 = 30.0;
const CAPACITY_N: [usize; 5] = [2, 3, 4, 5, 6];

// Criterion 5
const LATTICE_SIDE: usize = 11;
const LATTICE_HALF_WIDTH: f64 = 400.0;
const LATTICE_REL_TOL: f64 = 1e-6;
const LATTICE_FLOOR: f64 = 1e-12;
const QUAD_START_NODES: usize = 400;
const QUAD_MAX_NODES: usize = 25_600;
const KERNEL_GRID_POINTS: usize = 256;
const KERNEL_LAMBDA_TOL: f64 = 1e-8;

// Criterion 6
const SUM_TOL: f64 = 1e-10;
const SEPARABLE_TOL: f64 = 1e-6;
const UNIFORM_TOL: f64 = 1e-10;
const ADDITIVITY_REL_TOL: f64 = 1e-2;
const ADDITIVITY_DQ: f64 = 200.0;
const ADDITIVITY_GRID: (f64, usize) = (1600.0, 2049);
const SHIFT_INVARIANCE_TOL: f64 = 1e-8;
/// Measured on the 512-point sweep grid; a physical amplitude whose tails reach
/// the window edge cannot be translated without changing what the window holds.
const SHIFT_DEVIATION_FROZEN: (f64, f64) = (1e-7, 1e-3);

// Criterion 7
const CONVERGENCE_DS: f64 = 1e-2;
const CONVERGENCE_DK_REL: f64 = 1e-2;

// Criterion 8
const W_AT_I: f64 = 0.427_583_6;
const W_AT_I_TOL: f64 = 1e-7;
const ERFI_REL_TOL: f64 = 1e-9;
const ERFI_RADIUS: f64 = 3.0;

type Criterion = Box<dyn FnOnce(&mut Vec<Golden>) -> Verdict>;

struct Verdict {
    pass: bool,
    detail: String,
    /// Failure is a documented deviation whose measurement stayed in its frozen range.
    known_deviation: bool,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, known_deviation: false }
    }
}

fn closed() -> Evaluator {
    Evaluator::closed(Model::default())
}

fn spectrum(shifts: &ShiftSet, grid: FrequencyGrid) -> SchmidtResult {
    schmidt_spectrum(&build_jsa(grid, shifts, &closed()).unwrap()).unwrap()
}

fn shifts(spec: &GeometrySpec) -> ShiftSet {
    make_shifts(spec).unwrap()
}

/// Golden scenarios found by criteria 1 and 2, re-checked for convergence in 7.
struct Golden {
    label: String,
    geometry: GeometrySpec,
}

fn fig4_minima(golden: &mut Vec<Golden>) -> Verdict {
    let curves: Vec<Curve> =
        run_sweep(&SweepSpec::fig4(), FrequencyGrid::sweep(), &PhysicalParams::default(), &EvaluatorConfig::default())
            .unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for curve in &curves {
        let (want_s, want_dq) = match curve.family {
            GeometryFamily::Octagon => (FIG4_OCTAGON_S, FIG4_OCTAGON_DQ),
            _ => (FIG4_PLUS_CROSS_S, FIG4_PLUS_CROSS_DQ),
        };
        match find_dip(&curve.points) {
            Ok(dip) => {
                let ok = (dip.entropy_s - want_s).abs() <= FIG4_S_TOL && (dip.param - want_dq).abs() <= FIG4_DQ_TOL;
                pass &= ok;
                parts.push(format!("{} S={:.3} at dq={:.1}", curve.family, dip.entropy_s, dip.param));
                golden.push(Golden {
                    label: format!("{} at dq={:.1}", curve.family, dip.param),
                    geometry: GeometrySpec::shape(curve.family, dip.param),
                });
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", curve.family));
            }
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn anti_correlated_four(golden: &mut Vec<Golden>) -> Verdict {
    let geometry = GeometrySpec::line(GeometryFamily::AntiCorrelation, ANTI4_DQ, 4);
    let r = spectrum(&shifts(&geometry), FrequencyGrid::default());
    golden.push(Golden { label: format!("anti_correlation N=4 at dq={ANTI4_DQ}"), geometry });
    Verdict::new((r.entropy_s - ANTI4_S).abs() <= ANTI4_S_TOL, format!("S={:.3} (K={:.3})", r.entropy_s, r.schmidt_k))
}

fn capacity() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (dq, above) in [(CAPACITY_SMALL_DQ, false), (CAPACITY_LARGE_DQ, true)] {
        let ks: Vec<String> = CAPACITY_N
            .iter()
            .map(|&n| {
                let k = spectrum(&shifts(&GeometrySpec::line(GeometryFamily::AntiCorrelation, dq, n)), FrequencyGrid::sweep())
                    .schmidt_k;
                pass &= if above { k > n as f64 } else { k < n as f64 };
                format!("{k:.2}")
            })
            .collect();
        parts.push(format!("dq={dq}: K=[{}] {} N", ks.join(", "), if above { ">" } else { "<" }));
    }
    Verdict::new(pass, parts.join("; "))
}

fn fig2a_suite() -> Verdict {
    let curves =
        run_sweep(&SweepSpec::fig2a(), FrequencyGrid::sweep(), &PhysicalParams::default(), &EvaluatorConfig::default())
            .unwrap();
    let at = |c: &Curve, dq: f64| c.at(dq).expect("swept value").entropy_s;
    let s0: Vec<f64> = curves.iter().map(|c| at(c, 0.0)).collect();
    let ordered = s0.windows(2).all(|w| w[0] < w[1]);
    let mut pass = ordered;
    let mut parts = vec![format!(
        "S(dq=0) T={} -> {} ordered={ordered}",
        curves.iter().map(|c| c.temperature.to_string()).collect::<Vec<_>>().join("/"),
        s0.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join("/")
    )];
    for c in &curves {
        let dip = find_dip(&c.points);
        let rises = at(c, 200.0) > at(c, 0.0);
        pass &= dip.is_ok() && rises;
        parts.push(match dip {
            Ok(d) => format!("T={} dip at dq={:.1}, S(200)={:.3}", c.temperature, d.param, at(c, 200.0)),
            Err(e) => format!("T={}: {e}", c.temperature),
        });
    }
    Verdict::new(pass, parts.join("; "))
}

fn oracle_equivalence() -> Verdict {
    let model = Model::default();
    let axis: Vec<f64> = (0..LATTICE_SIDE)
        .map(|k| -LATTICE_HALF_WIDTH + 2.0 * LATTICE_HALF_WIDTH * k as f64 / (LATTICE_SIDE - 1) as f64)
        .collect();
    let lattice: Vec<SpectralPoint> = axis.iter().flat_map(|&s| axis.iter().map(move |&i| SpectralPoint::new(s, i))).collect();
    let values: Vec<Complex64> = lattice.iter().map(|&p| f_doppler_closed(&model, p)).collect();
    let peak = values.iter().map(|z| z.norm()).fold(f64::NAN, f64::max);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut unconverged = 0;
    for (&p, &c) in lattice.iter().zip(&values) {
        if c.norm() < LATTICE_FLOOR * peak {
            continue;
        }
        let q = f_doppler_quad_adaptive(&model, p, PropagationScheme::CoPropagating, QUAD_START_NODES, QUAD_MAX_NODES)
            .unwrap();
        unconverged += usize::from(!q.converged);
        worst = worst.max((c - q.value).norm() / q.value.norm());
        compared += 1;
    }

    let grid = FrequencyGrid::new(LATTICE_HALF_WIDTH, KERNEL_GRID_POINTS).unwrap();
    let jsa = build_jsa(grid, &shifts(&GeometrySpec::shape(GeometryFamily::CrossFour, 40.0)), &closed()).unwrap();
    let svd = schmidt_spectrum(&jsa).unwrap();
    let kernels = schmidt_via_kernels(&jsa, 0).unwrap();
    let n = svd.lambdas.len().max(kernels.result.lambdas.len());
    let lambda_gap = (0..n)
        .map(|k| (svd.lambdas.get(k).unwrap_or(&0.0) - kernels.result.lambdas.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max);

    Verdict::new(
        worst < LATTICE_REL_TOL && unconverged == 0 && lambda_gap < KERNEL_LAMBDA_TOL,
        format!(
            "closed vs quadrature max rel {worst:.1e} over {compared} points ({unconverged} unconverged); \
             SVD vs kernel max |dλ| {lambda_gap:.1e}"
        ),
    )
}

/// Entangled Gaussian lobe centred at (a, b), narrow along ωs+ωi and wide across it.
fn lobe(ds: f64, di: f64, a: f64, b: f64) -> Complex64 {
    let (x, y) = (ds - a, di - b);
    let along = (x + y) / 12.0;
    let across = (x - y) / 50.0;
    Complex64::new((-along * along - across * across).exp(), 0.0)
}

fn lobe_spectrum(centres: &[(f64, f64)], grid: FrequencyGrid) -> SchmidtResult {
    let jsa = JointSpectralMatrix::from_fn(grid, |s, i| centres.iter().map(|&(a, b)| lobe(s, i, a, b)).sum()).unwrap();
    schmidt_spectrum(&jsa).unwrap()
}

fn max_lambda_gap(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len().max(b.len())).map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).fold(0.0, f64::max)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn analytic_properties() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        pass &= ok;
        parts.push(format!("{name} {}: {detail}", if ok { "ok" } else { "FAIL" }));
    };

    let golden = spectrum(&shifts(&GeometrySpec::shape(GeometryFamily::CrossFour, 30.0)), FrequencyGrid::sweep());
    let sum_err = (golden.lambdas.iter().sum::<f64>() - 1.0).abs();
    check("sum", sum_err < SUM_TOL, format!("|Σλ-1|={sum_err:.1e}"));

    let grid = FrequencyGrid::new(400.0, 256).unwrap();
    let separable = JointSpectralMatrix::from_fn(grid, |s, i| {
        let g = (-(s - 7.0).powi(2) / 800.0).exp();
        let h = Complex64::from_polar((-(i + 3.0).powi(2) / 300.0).exp(), 0.01 * i);
        h * g
    })
    .unwrap();
    let r = schmidt_spectrum(&separable).unwrap();
    check(
        "separable",
        r.entropy_s < SEPARABLE_TOL && r.schmidt_k - 1.0 < SEPARABLE_TOL,
        format!("S={:.1e} K-1={:.1e}", r.entropy_s, r.schmidt_k - 1.0),
    );

    let mut uniform_err: f64 = 0.0;
    for n in 1..=8usize {
        // n identical product lobes on disjoint supports, centred on grid points, give exactly equal weights.
        let centres: Vec<(f64, f64)> = (0..n).map(|k| (grid.point(32 + 24 * k), grid.point(223 - 24 * k))).collect();
        let jsa = JointSpectralMatrix::from_fn(grid, |s, i| {
            let mut z = 0.0;
            for &(a, b) in &centres {
                let inside = |x: f64, c: f64| (x - c).abs() < 20.0;
                if inside(s, a) && inside(i, b) {
                    z += (1.0 - ((s - a) / 20.0).powi(2)) * (1.0 - ((i - b) / 20.0).powi(2));
                }
            }
            Complex64::new(z, 0.0)
        })
        .unwrap();
        let r = schmidt_spectrum(&jsa).unwrap();
        uniform_err = uniform_err.max((r.entropy_s - (n as f64).log2()).abs()).max((r.schmidt_k - n as f64).abs());
        let weights = vec![1.0 / n as f64; n];
        uniform_err = uniform_err
            .max((entropy(&weights).unwrap() - (n as f64).log2()).abs())
            .max((schmidt_number(&weights).unwrap() - n as f64).abs());
    }
    check("uniform", uniform_err < UNIFORM_TOL, format!("max error {uniform_err:.1e}"));

    let single_lobe = lobe_spectrum(&[(0.0, 0.0)], grid);
    let mut lobe_err: f64 = 0.0;
    for n in 2..=4usize {
        let centres: Vec<(f64, f64)> = (0..n).map(|k| (-240.0 + 160.0 * k as f64, 240.0 - 160.0 * k as f64)).collect();
        let r = lobe_spectrum(&centres, grid);
        lobe_err = lobe_err
            .max(relative(r.entropy_s, single_lobe.entropy_s + (n as f64).log2()))
            .max(relative(r.schmidt_k, n as f64 * single_lobe.schmidt_k));
    }
    let wide = FrequencyGrid::new(ADDITIVITY_GRID.0, ADDITIVITY_GRID.1).unwrap();
    let one = spectrum(&ShiftSet::single(), wide);
    let two = spectrum(&shifts(&GeometrySpec::line(GeometryFamily::AntiCorrelation, ADDITIVITY_DQ, 2)), wide);
    let ds = relative(two.entropy_s, one.entropy_s + 1.0);
    let dk = relative(two.schmidt_k, 2.0 * one.schmidt_k);
    check(
        "additivity",
        lobe_err < ADDITIVITY_REL_TOL && ds < ADDITIVITY_REL_TOL && dk < ADDITIVITY_REL_TOL,
        format!("synthetic lobes max rel {lobe_err:.1e}; physical N=2 dq={ADDITIVITY_DQ} rel dS={ds:.1e} dK={dk:.1e}"),
    );

    // Translating a compactly supported amplitude by whole grid steps is exact.
    let step = grid.spacing();
    let base = lobe_spectrum(&[(0.0, 0.0)], grid);
    let moved = lobe_spectrum(&[(7.0 * step, -3.0 * step)], grid);
    let synthetic_gap = max_lambda_gap(&base.lambdas, &moved.lambdas);
    let cross = shifts(&GeometrySpec::shape(GeometryFamily::CrossFour, 30.0));
    let physical_step = FrequencyGrid::sweep().spacing();
    let physical_gap = max_lambda_gap(&golden.lambdas, &spectrum(&cross.translated(physical_step, physical_step), FrequencyGrid::sweep()).lambdas);
    let shift_ok = synthetic_gap < SHIFT_INVARIANCE_TOL && physical_gap < SHIFT_INVARIANCE_TOL;
    let frozen = synthetic_gap < SHIFT_INVARIANCE_TOL
        && (SHIFT_DEVIATION_FROZEN.0..SHIFT_DEVIATION_FROZEN.1).contains(&physical_gap);
    check(
        "global shift",
        shift_ok,
        format!("synthetic max |dλ| {synthetic_gap:.1e}; physical cross_four by one grid step max |dλ| {physical_gap:.1e}"),
    );

    let mut w_err: f64 = 0.0;
    for n in 2..=6usize {
        let w = SchmidtResult::from_lambdas(vec![1.0 / n as f64; n]).unwrap();
        w_err = w_err.max((w.schmidt_k - n as f64).abs());
    }
    check("W-state", w_err < UNIFORM_TOL, format!("max |K-N| {w_err:.1e}"));

    let others_pass = parts.iter().filter(|p| !p.starts_with("global shift")).all(|p| p.contains(" ok: "));
    Verdict { pass, detail: parts.join("; "), known_deviation: !pass && others_pass && frozen }
}

fn convergence(golden: &[Golden]) -> Verdict {
    let mut pass = !golden.is_empty();
    let mut parts = Vec::new();
    for g in golden {
        let scenario = Scenario::new(closed(), shifts(&g.geometry));
        let report = convergence_check(&scenario, FrequencyGrid::sweep(), false).unwrap();
        let r = report.resolution;
        let ok = r.delta_s.abs() < CONVERGENCE_DS && r.rel_delta_k.abs() < CONVERGENCE_DK_REL;
        pass &= ok;
        parts.push(format!("{} dS={:.1e} dK/K={:.1e}", g.label, r.delta_s, r.rel_delta_k));
    }
    Verdict::new(pass, parts.join("; "))
}

/// erfc(1) from the Maclaurin series of erf.
fn erfc_one() -> f64 {
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for n in 0..40 {
        if n > 0 {
            factorial *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (factorial * (2 * n + 1) as f64);
    }
    1.0 - 2.0 / PI.sqrt() * sum
}

/// `exp(-A²)[π·erfi(A) + iπ]` with `exp(-A²)erfi(A)` summed as one Maclaurin series,
/// `(2/√π) Σ (-2A²)ⁿ A / (2n+1)!!`, which avoids cancelling two large factors.
fn erfi_series_term(a: Complex64) -> Complex64 {
    let minus_two_a2 = -2.0 * a * a;
    let mut term = a;
    let mut sum = a;
    for n in 1..200 {
        term = term * minus_two_a2 / (2 * n + 1) as f64;
        sum += term;
    }
    2.0 * PI.sqrt() * sum + Complex64::new(0.0, PI) * (-a * a).exp()
}

fn faddeeva_accuracy() -> Verdict {
    let origin = faddeeva_w(Complex64::new(0.0, 0.0));
    let origin_exact = origin == Complex64::new(1.0, 0.0);
    let at_i = faddeeva_w(Complex64::new(0.0, 1.0));
    let oracle = std::f64::consts::E * erfc_one();
    let at_i_ok = (at_i.re - W_AT_I).abs() < W_AT_I_TOL && at_i.im.abs() < W_AT_I_TOL && (at_i.re - oracle).abs() < 1e-13;

    let mut worst: f64 = 0.0;
    let mut where_worst = Complex64::new(0.0, 0.0);
    for r in 1..=30 {
        let radius = ERFI_RADIUS * r as f64 / 30.0;
        for k in 0..72 {
            let a = Complex64::from_polar(radius, 2.0 * PI * k as f64 / 72.0);
            let want = erfi_series_term(a);
            let err = (scaled_erfi_term(a) - want).norm() / want.norm();
            if err > worst {
                worst = err;
                where_worst = a;
            }
        }
    }
    Verdict::new(
        origin_exact && at_i_ok && worst < ERFI_REL_TOL,
        format!(
            "w(0)={origin} exact={origin_exact}; w(i)={:.10} (series oracle {oracle:.10}); erfi route max rel {worst:.1e} at A={where_worst:.3}",
            at_i.re
        ),
    )
}

fn main() -> ExitCode {
    let mut golden = Vec::new();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("Fig. 4 shape minima", Box::new(fig4_minima)),
        ("anti-correlated N=4 entropy", Box::new(anti_correlated_four)),
        ("capacity K vs N", Box::new(|_| capacity())),
        ("Fig. 2(a) temperature suite", Box::new(|_| fig2a_suite())),
        ("closed form and kernel oracles", Box::new(|_| oracle_equivalence())),
        ("analytic properties", Box::new(|_| analytic_properties())),
        ("grid convergence of golden scenarios", Box::new(|g| convergence(g))),
        ("Faddeeva accuracy", Box::new(|_| faddeeva_accuracy())),
    ];

    let mut unexpected = 0;
    let mut known = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = run(&mut golden);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if v.known_deviation { " [known deviation, frozen]" } else { "" };
        println!("{tag} {} {name}{note} ({:.1}s): {}", k + 1, start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            if v.known_deviation {
                known += 1;
            } else {
                unexpected += 1;
            }
        }
    }
    println!("acceptance: {unexpected} unexpected failure(s), {known} known deviation(s)");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
