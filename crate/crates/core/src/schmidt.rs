//! Discretized joint spectral amplitudes and their Schmidt decomposition.
//!
//! A JSA sampled on a uniform `n × n` grid with spacing `h` is normalized so
//! that `Σ|F|²h² = 1`. The matrix `M = F·h` then has unit Frobenius norm and
//! its squared singular values are the Schmidt weights λ_n. Modes are
//! rescaled by `1/√h` so they are orthonormal under the rectangle rule,
//! `Σ_j ψ_a(ω_j) ψ_b*(ω_j) h = δ_ab`.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::multiplex::{f_multiplexed, ShiftSet};
use crate::spectral::{Evaluator, SpectralPoint};

/// Weights below this fraction of the total are treated as numerical zero.
pub const LAMBDA_CUTOFF: f64 = 1e-12;

/// Fraction of squared mass in the two outermost rows/columns that triggers a clipping warning.
pub const CLIPPING_FRACTION: f64 = 1e-3;

/// Tolerance on Σλ accepted by [`entropy`] and [`schmidt_number`].
pub const NORMALIZATION_TOL: f64 = 1e-6;

pub const MIN_GRID_POINTS: usize = 64;

/// Square frequency window `[-W, W]` sampled at `n_points` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyGrid {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { half_width: 400.0, n_points: 1024 }
    }
}

impl FrequencyGrid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        let g = Self { half_width, n_points };
        let issues = g.issues();
        if issues.is_empty() {
            Ok(g)
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// Default sweep grid: ±400Γ₃ at 512 points.
    pub fn sweep() -> Self {
        Self { half_width: 400.0, n_points: 512 }
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            issues.push(Issue::new("half_width", format!("must be finite and positive, got {}", self.half_width)));
        }
        if self.n_points < MIN_GRID_POINTS {
            issues.push(Issue::new("n_points", format!("must be at least {MIN_GRID_POINTS}, got {}", self.n_points)));
        }
        issues
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    /// The k-th sample; exactly antisymmetric about the center.
    pub fn point(&self, k: usize) -> f64 {
        let n = self.n_points;
        if 2 * k + 1 > n {
            -self.point(n - 1 - k)
        } else {
            2.0 * self.half_width * k as f64 / (n - 1) as f64 - self.half_width
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    pub fn refined(&self) -> Self {
        Self { n_points: 2 * self.n_points, ..*self }
    }

    /// Twice the window at the same spacing.
    pub fn widened(&self) -> Self {
        Self { half_width: 2.0 * self.half_width, n_points: 2 * self.n_points - 1 }
    }
}

/// Sampled joint spectral amplitude. Rows index Δω_s, columns Δω_i.
#[derive(Debug, Clone)]
pub struct JointSpectralMatrix {
    values: Mat<Complex64>,
    grid: FrequencyGrid,
    normalized: bool,
    warnings: Vec<String>,
}

impl JointSpectralMatrix {
    /// Samples `f(Δω_s, Δω_i)` on the grid and normalizes.
    pub fn from_fn<F>(grid: FrequencyGrid, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let issues = grid.issues();
        if !issues.is_empty() {
            return Err(Error::Validation(issues.into_iter().map(|i| i.nested("grid")).collect()));
        }
        let axis = grid.points();
        let n = grid.n_points;
        let columns: Vec<Vec<Complex64>> =
            axis.par_iter().map(|&di| axis.iter().map(|&ds| f(ds, di)).collect()).collect();
        let values = Mat::from_fn(n, n, |r, c| columns[c][r]);
        let mut jsa = Self { values, grid, normalized: false, warnings: Vec::new() };
        jsa.normalize()?;
        jsa.check_clipping();
        Ok(jsa)
    }

    /// Wraps raw samples without normalizing.
    pub fn from_raw(grid: FrequencyGrid, values: Mat<Complex64>) -> Result<Self> {
        if values.nrows() != grid.n_points || values.ncols() != grid.n_points {
            return Err(Error::invalid(
                "values",
                format!("expected {0}×{0}, got {1}×{2}", grid.n_points, values.nrows(), values.ncols()),
            ));
        }
        Ok(Self { values, grid, normalized: false, warnings: Vec::new() })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn values(&self) -> &Mat<Complex64> {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `Σ|F|²h²`.
    pub fn norm_sqr(&self) -> f64 {
        let h = self.grid.spacing();
        let mut sum = 0.0;
        for c in 0..self.values.ncols() {
            for r in 0..self.values.nrows() {
                sum += self.values[(r, c)].norm_sqr();
            }
        }
        sum * h * h
    }

    /// Rescales so that `Σ|F|²h² = 1` (the discrete 1/√𝒩).
    pub fn normalize(&mut self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if !(norm_sqr.is_finite() && norm_sqr > 0.0) {
            return Err(Error::Convergence(format!("amplitude has non-normalizable norm² {norm_sqr}")));
        }
        let scale = norm_sqr.sqrt().recip();
        for c in 0..self.values.ncols() {
            for r in 0..self.values.nrows() {
                self.values[(r, c)] *= scale;
            }
        }
        self.normalized = true;
        Ok(())
    }

    /// Share of squared mass in the two outermost rows and columns.
    pub fn edge_fraction(&self) -> f64 {
        let n = self.grid.n_points;
        let edge = |k: usize| k < 2 || k + 2 >= n;
        let (mut rim, mut total) = (0.0, 0.0);
        for c in 0..n {
            for r in 0..n {
                let m = self.values[(r, c)].norm_sqr();
                total += m;
                if edge(r) || edge(c) {
                    rim += m;
                }
            }
        }
        rim / total
    }

    fn check_clipping(&mut self) {
        let fraction = self.edge_fraction();
        if fraction > CLIPPING_FRACTION {
            self.warnings.push(format!(
                "window clipping: {fraction:.3e} of the squared amplitude lies in the outermost two rows/columns of the ±{} window",
                self.grid.half_width
            ));
        }
    }

    /// `F·h`, whose squared singular values are the Schmidt weights.
    fn weighted(&self) -> Mat<Complex64> {
        let h = self.grid.spacing();
        Mat::from_fn(self.values.nrows(), self.values.ncols(), |r, c| self.values[(r, c)] * h)
    }

    fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::invalid("jsa", "amplitude must be normalized before decomposition"))
        }
    }
}

/// Samples the multiplexed amplitude over the grid and normalizes it.
pub fn build_jsa(grid: FrequencyGrid, shifts: &ShiftSet, evaluator: &Evaluator) -> Result<JointSpectralMatrix> {
    JointSpectralMatrix::from_fn(grid, |ds, di| f_multiplexed(evaluator, SpectralPoint::new(ds, di), shifts))
}

/// Schmidt weights, entanglement measures and (optionally) discretized modes.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtResult {
    /// Descending weights above [`LAMBDA_CUTOFF`].
    pub lambdas: Vec<f64>,
    /// Entropy of entanglement in bits.
    pub entropy_s: f64,
    pub schmidt_k: f64,
    #[serde(skip)]
    pub modes_s: Vec<Vec<Complex64>>,
    #[serde(skip)]
    pub modes_i: Vec<Vec<Complex64>>,
}

impl SchmidtResult {
    pub fn from_lambdas(lambdas: Vec<f64>) -> Result<Self> {
        let entropy_s = entropy(&lambdas)?;
        let schmidt_k = schmidt_number(&lambdas)?;
        Ok(Self { lambdas, entropy_s, schmidt_k, modes_s: Vec::new(), modes_i: Vec::new() })
    }

    /// `Σ_n √λ_n ψ_n(ω_s) φ_n(ω_i)` on the grid.
    pub fn reconstruct(&self) -> Mat<Complex64> {
        let n = self.modes_s.first().map_or(0, Vec::len);
        let mut out = Mat::<Complex64>::zeros(n, n);
        for ((lambda, psi), phi) in self.lambdas.iter().zip(&self.modes_s).zip(&self.modes_i) {
            let amp = lambda.sqrt();
            for c in 0..n {
                let right = phi[c] * amp;
                for r in 0..n {
                    out[(r, c)] += psi[r] * right;
                }
            }
        }
        out
    }
}

/// Von Neumann entropy `-Σ λ log₂ λ` with `0·log 0 = 0`.
pub fn entropy(lambdas: &[f64]) -> Result<f64> {
    check_weights(lambdas)?;
    Ok(-lambdas.iter().filter(|&&l| l > 0.0).map(|&l| l * l.log2()).sum::<f64>())
}

/// Schmidt number `1/Σλ²`.
pub fn schmidt_number(lambdas: &[f64]) -> Result<f64> {
    check_weights(lambdas)?;
    Ok(lambdas.iter().map(|l| l * l).sum::<f64>().recip())
}

fn check_weights(lambdas: &[f64]) -> Result<()> {
    if let Some((n, l)) = lambdas.iter().enumerate().find(|(_, l)| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::invalid(format!("lambdas[{n}]"), format!("weights must be finite and nonnegative, got {l}")));
    }
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid("lambdas", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn retained(mut lambdas: Vec<f64>) -> Vec<f64> {
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.retain(|&l| l > LAMBDA_CUTOFF);
    lambdas
}

/// Schmidt weights only (singular values of `F·h`, squared).
pub fn schmidt_coefficients(jsa: &JointSpectralMatrix) -> Result<Vec<f64>> {
    jsa.require_normalized()?;
    let sv = jsa
        .weighted()
        .singular_values()
        .map_err(|e| Error::Convergence(format!("singular value iteration failed: {e:?}")))?;
    Ok(retained(sv.into_iter().map(|s| s * s).collect()))
}

/// Weights, S and K without modes; the fast path for sweeps.
pub fn schmidt_spectrum(jsa: &JointSpectralMatrix) -> Result<SchmidtResult> {
    SchmidtResult::from_lambdas(schmidt_coefficients(jsa)?)
}

/// Full decomposition from the thin SVD `F·h = U Σ V†`.
///
/// `ψ_n = U_n/√h` and `φ_n = conj(V_n)/√h`; each ψ_n is rotated so its
/// largest-magnitude sample is real and positive, and φ_n takes the opposite
/// phase so the product, and hence √λ_n, is unchanged.
pub fn schmidt_decompose(jsa: &JointSpectralMatrix) -> Result<SchmidtResult> {
    jsa.require_normalized()?;
    let svd = jsa.weighted().thin_svd().map_err(|e| Error::Convergence(format!("SVD failed: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let sigma = svd.S().column_vector();
    let h = jsa.grid.spacing();
    let norm = h.sqrt().recip();

    let mut order: Vec<usize> = (0..sigma.nrows()).collect();
    order.sort_by(|&a, &b| sigma[b].re.total_cmp(&sigma[a].re));

    let mut lambdas = Vec::new();
    let mut modes_s = Vec::new();
    let mut modes_i = Vec::new();
    for k in order {
        let lambda = sigma[k].re * sigma[k].re;
        if lambda <= LAMBDA_CUTOFF {
            break;
        }
        let mut psi: Vec<Complex64> = (0..u.nrows()).map(|r| u[(r, k)] * norm).collect();
        let mut phi: Vec<Complex64> = (0..v.nrows()).map(|r| v[(r, k)].conj() * norm).collect();
        fix_phase(&mut psi, &mut phi);
        lambdas.push(lambda);
        modes_s.push(psi);
        modes_i.push(phi);
    }
    let mut result = SchmidtResult::from_lambdas(lambdas)?;
    result.modes_s = modes_s;
    result.modes_i = modes_i;
    Ok(result)
}

/// First sample within rounding of the largest magnitude, so symmetric
/// modes with tied peaks pick the same sample before and after a rotation.
fn peak_index(mode: &[Complex64]) -> usize {
    let max = mode.iter().map(|z| z.norm()).fold(0.0, f64::max);
    mode.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0)
}

fn fix_phase(psi: &mut [Complex64], phi: &mut [Complex64]) {
    let peak = peak_index(psi);
    let rotation = Complex64::from_polar(1.0, -psi[peak].arg());
    psi.iter_mut().for_each(|z| *z *= rotation);
    phi.iter_mut().for_each(|z| *z *= rotation.conj());
}

/// Output of the kernel route.
#[derive(Debug, Clone)]
pub struct KernelSchmidt {
    /// Weights, S, K from the signal kernel; modes from both kernels.
    pub result: SchmidtResult,
    /// Nonzero spectrum of the idler kernel, descending.
    pub idler_lambdas: Vec<f64>,
    /// Frobenius norm of `K₁ - K₁†`.
    pub hermiticity_residual: f64,
}

/// Schmidt decomposition from the one-photon correlation kernels.
///
/// `K₁(ω,ω') = ∫ f(ω,ω₁) f*(ω',ω₁) dω₁` and `K₂(ω,ω') = ∫ f(ω₂,ω) f*(ω₂,ω') dω₂`,
/// discretized with the rectangle rule, i.e. `M M†` and `Mᵀ M̄` for `M = F·h`.
/// Each is diagonalized as a Hermitian eigenproblem. The first `n_modes`
/// eigenvectors are kept as modes; idler modes are phase-aligned with the
/// projection `∫ ψ_n*(ω_s) f(ω_s, ω_i) dω_s`.
pub fn schmidt_via_kernels(jsa: &JointSpectralMatrix, n_modes: usize) -> Result<KernelSchmidt> {
    jsa.require_normalized()?;
    let m = jsa.weighted();
    let k1 = &m * m.adjoint();
    let k2 = m.transpose() * m.conjugate();

    let n = k1.nrows();
    let mut residual = 0.0;
    for c in 0..n {
        for r in 0..n {
            residual += (k1[(r, c)] - k1[(c, r)].conj()).norm_sqr();
        }
    }

    let e1 = k1.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Convergence(format!("kernel eigensolver failed: {e:?}")))?;
    let e2 = k2.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Convergence(format!("kernel eigensolver failed: {e:?}")))?;

    let descending = |s: faer::diag::DiagRef<'_, Complex64>| {
        let mut idx: Vec<usize> = (0..s.dim()).collect();
        idx.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
        idx
    };
    let order1 = descending(e1.S());
    let order2 = descending(e2.S());
    let lambdas = retained(order1.iter().map(|&k| e1.S()[k].re.max(0.0)).collect());
    let idler_lambdas = retained(order2.iter().map(|&k| e2.S()[k].re.max(0.0)).collect());

    let h = jsa.grid.spacing();
    let norm = h.sqrt().recip();
    let (u1, u2) = (e1.U(), e2.U());
    let mut modes_s = Vec::new();
    let mut modes_i = Vec::new();
    for (slot, (&k, &k_i)) in order1.iter().zip(&order2).enumerate().take(n_modes.min(lambdas.len())) {
        let mut psi: Vec<Complex64> = (0..n).map(|r| u1[(r, k)] * norm).collect();
        let mut phi: Vec<Complex64> = (0..n).map(|r| u2[(r, k_i)] * norm).collect();
        fix_phase(&mut psi, &mut []);
        // ∫ψ*F dω_s / √λ gives φ with the phase that keeps √λ real and positive.
        let inv_sqrt = lambdas[slot].sqrt().recip();
        let projected: Vec<Complex64> = (0..n)
            .map(|c| (0..n).map(|r| psi[r].conj() * jsa.values[(r, c)]).sum::<Complex64>() * h * inv_sqrt)
            .collect();
        let overlap: Complex64 = phi.iter().zip(&projected).map(|(a, b)| a.conj() * b).sum();
        let rotation = Complex64::from_polar(1.0, overlap.arg());
        phi.iter_mut().for_each(|z| *z *= rotation);
        modes_s.push(psi);
        modes_i.push(phi);
    }

    let mut result = SchmidtResult::from_lambdas(lambdas)?;
    result.modes_s = modes_s;
    result.modes_i = modes_i;
    Ok(KernelSchmidt { result, idler_lambdas, hermiticity_residual: residual.sqrt() })
}

/// A fixed amplitude to be re-sampled on different grids.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub evaluator: Evaluator,
    pub shifts: ShiftSet,
}

impl Scenario {
    pub fn new(evaluator: Evaluator, shifts: ShiftSet) -> Self {
        Self { evaluator, shifts }
    }

    pub fn spectrum(&self, grid: FrequencyGrid) -> Result<(SchmidtResult, Vec<String>)> {
        let jsa = build_jsa(grid, &self.shifts, &self.evaluator)?;
        Ok((schmidt_spectrum(&jsa)?, jsa.warnings().to_vec()))
    }
}

/// Largest |ΔS| accepted by [`convergence_check`].
pub const CONVERGENCE_DS: f64 = 1e-2;
/// Largest |ΔK|/K accepted by [`convergence_check`].
pub const CONVERGENCE_DK_REL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSample {
    pub n_points: usize,
    pub half_width: f64,
    pub entropy_s: f64,
    pub schmidt_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub against: GridSample,
    pub delta_s: f64,
    pub rel_delta_k: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub base: GridSample,
    /// Same window, twice the points.
    pub resolution: Comparison,
    /// Twice the window at the same spacing, when requested.
    pub window: Option<Comparison>,
    pub passed: bool,
}

/// Re-evaluates S and K on a doubled grid (and optionally a doubled window) and reports the drift.
pub fn convergence_check(scenario: &Scenario, grid: FrequencyGrid, check_window: bool) -> Result<ConvergenceReport> {
    let sample = |g: FrequencyGrid| -> Result<GridSample> {
        let (r, _) = scenario.spectrum(g)?;
        Ok(GridSample { n_points: g.n_points, half_width: g.half_width, entropy_s: r.entropy_s, schmidt_k: r.schmidt_k })
    };
    let base = sample(grid)?;
    let compare = |other: GridSample| {
        let delta_s = other.entropy_s - base.entropy_s;
        let rel_delta_k = (other.schmidt_k - base.schmidt_k) / base.schmidt_k;
        Comparison {
            against: other,
            delta_s,
            rel_delta_k,
            passed: delta_s.abs() < CONVERGENCE_DS && rel_delta_k.abs() < CONVERGENCE_DK_REL,
        }
    };
    let resolution = compare(sample(grid.refined())?);
    let window = if check_window { Some(compare(sample(grid.widened())?)) } else { None };
    let passed = resolution.passed && window.map_or(true, |w| w.passed);
    Ok(ConvergenceReport { base, resolution, window, passed })
}
