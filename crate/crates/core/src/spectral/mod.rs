//! Biphoton spectral functions of a single ensemble.
//!
//! Arguments are detunings in units of Γ₃: `d_omega_s` is measured from the
//! two-photon resonance of the signal and `d_omega_i` from the idler
//! transition frequency. Values carry units of 1/Γ₃; overall constants that do
//! not depend on the detunings are dropped since every consumer normalizes.

pub mod faddeeva;
pub mod hermite;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::params::Model;

pub use faddeeva::faddeeva_w;
pub use hermite::GaussHermite;

/// Node count for velocity quadrature unless configured otherwise.
pub const DEFAULT_QUAD_NODES: usize = 400;

/// Smallest rule accepted for velocity quadrature.
pub const MIN_QUAD_NODES: usize = 16;

/// Relative change under node doubling below which a quadrature value counts as converged.
pub const QUAD_CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub d_omega_s: f64,
    pub d_omega_i: f64,
}

impl SpectralPoint {
    pub const fn new(d_omega_s: f64, d_omega_i: f64) -> Self {
        Self { d_omega_s, d_omega_i }
    }

    pub fn shifted(self, ds: f64, di: f64) -> Self {
        Self::new(self.d_omega_s + ds, self.d_omega_i + di)
    }
}

/// Relative orientation of the pump fields and the emitted pair; fixes the sign of the idler Doppler shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationScheme {
    #[default]
    CoPropagating,
    CounterPropagating,
}

impl PropagationScheme {
    /// Sign multiplying `k_i v` inside the velocity average (`Δω_i ∓ k_i v`).
    fn idler_sign(self) -> f64 {
        match self {
            PropagationScheme::CoPropagating => 1.0,
            PropagationScheme::CounterPropagating => -1.0,
        }
    }
}

/// Cold-ensemble amplitude split as `exp(log_envelope) · lorentzian`.
fn cold_factors(model: &Model, ds: f64, di: f64) -> (f64, Complex64) {
    let tau = model.tau();
    let sum = ds + di;
    let log_envelope = -sum * sum * tau * tau / 8.0;
    let lorentzian = Complex64::new(model.gamma_n() / 2.0, -di).inv();
    (log_envelope, lorentzian)
}

/// Cold-ensemble spectral function `exp(-(Δω_s+Δω_i)²τ²/8) / (Γ₃ᴺ/2 - iΔω_i)`.
pub fn f_cold(model: &Model, p: SpectralPoint) -> Complex64 {
    let (log_envelope, lorentzian) = cold_factors(model, p.d_omega_s, p.d_omega_i);
    log_envelope.exp() * lorentzian
}

/// Complex argument of the error-function term in the co-propagating Doppler average:
///
/// `A = √(τ²/(8b)) · [b r Δω_s + (b r - 1) Δω_i - iΓ₃ᴺ/2] / r`, with `r = k_i/k̄_si`.
pub fn doppler_argument(model: &Model, p: SpectralPoint) -> Complex64 {
    let b = model.derived.b;
    let r = model.idler_fraction();
    let tau = model.tau();
    let scale = (tau * tau / (8.0 * b)).sqrt();
    let numer = Complex64::new(b * r * p.d_omega_s + (b * r - 1.0) * p.d_omega_i, -model.gamma_n() / 2.0);
    scale * numer / r
}

/// Closed-form Doppler-broadened spectral function for co-propagating excitation.
///
/// The error-function factor `exp(-A²)[π·Erfi(A) + iπ]` is evaluated as `iπ·w(-A)`.
/// A [`Model`] always has positive temperature; use [`f_cold`] for the cold limit.
pub fn f_doppler_closed(model: &Model, p: SpectralPoint) -> Complex64 {
    let b = model.derived.b;
    let tau = model.tau();
    let sum = p.d_omega_s + p.d_omega_i;
    let envelope = (-tau * tau * (1.0 - b) * sum * sum / 8.0).exp();
    let prefactor = Complex64::new(0.0, -1.0 / ((2.0 * PI).sqrt() * model.derived.doppler_width_i));
    prefactor * envelope * faddeeva::scaled_erfi_term(doppler_argument(model, p))
}

/// Maxwell–Boltzmann average of [`f_cold`] by Gauss–Hermite quadrature.
///
/// With `x = v/σ`, the integrand is `f_C(Δω_s - D_s x, Δω_i ∓ D_i x)·φ(x)`
/// where `D = kσ/Γ₃` and φ is the standard normal density. The pulse envelope
/// of `f_C` is itself Gaussian in `x`, so the nodes are placed on the product
/// of the two Gaussians (mean μ, width s) and the integrand is divided by that
/// proposal density before summation. All factors are combined in log space so
/// tail nodes underflow cleanly.
pub fn f_doppler_quad(model: &Model, p: SpectralPoint, scheme: PropagationScheme, rule: &GaussHermite) -> Complex64 {
    let d_s = model.derived.doppler_width_s;
    let d_i = model.derived.doppler_width_i * scheme.idler_sign();
    let tau = model.tau();
    let k = d_s + d_i;
    let sum = p.d_omega_s + p.d_omega_i;
    let a = 1.0 + tau * tau * k * k / 4.0;
    let mu = tau * tau * sum * k / (4.0 * a);
    let s = a.sqrt().recip();
    let spread = std::f64::consts::SQRT_2 * s;

    let mut acc = Complex64::new(0.0, 0.0);
    for (t, w) in rule.iter() {
        if w == 0.0 {
            continue;
        }
        let x = mu + spread * t;
        let (log_envelope, lorentzian) = cold_factors(model, p.d_omega_s - d_s * x, p.d_omega_i - d_i * x);
        let dev = x - mu;
        let log_ratio = log_envelope - 0.5 * x * x + dev * dev / (2.0 * s * s) + s.ln();
        acc += w * log_ratio.exp() * lorentzian;
    }
    acc / PI.sqrt()
}

/// Quadrature value together with its node-doubling check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadEstimate {
    /// Value from the larger (2·nodes) rule.
    pub value: Complex64,
    /// Nodes of the smaller rule in the final comparison.
    pub nodes: usize,
    /// |f(2n) - f(n)| / |f(2n)|.
    pub relative_change: f64,
    pub converged: bool,
}

/// Evaluates with `nodes` and `2·nodes` and flags non-convergence.
pub fn f_doppler_quad_checked(
    model: &Model,
    p: SpectralPoint,
    scheme: PropagationScheme,
    nodes: usize,
) -> Result<QuadEstimate> {
    if nodes < MIN_QUAD_NODES {
        return Err(Error::invalid("quad_nodes", format!("must be at least {MIN_QUAD_NODES}, got {nodes}")));
    }
    let coarse = f_doppler_quad(model, p, scheme, &GaussHermite::cached(nodes));
    let fine = f_doppler_quad(model, p, scheme, &GaussHermite::cached(2 * nodes));
    let relative_change = relative_difference(fine, coarse);
    Ok(QuadEstimate { value: fine, nodes, relative_change, converged: relative_change < QUAD_CONVERGENCE_TOL })
}

/// Doubles the rule from `start` until the doubling test passes or `max_nodes` would be exceeded.
pub fn f_doppler_quad_adaptive(
    model: &Model,
    p: SpectralPoint,
    scheme: PropagationScheme,
    start: usize,
    max_nodes: usize,
) -> Result<QuadEstimate> {
    let mut nodes = start;
    loop {
        let est = f_doppler_quad_checked(model, p, scheme, nodes)?;
        if est.converged || 4 * nodes > max_nodes {
            return Ok(est);
        }
        nodes *= 2;
    }
}

fn relative_difference(reference: Complex64, other: Complex64) -> f64 {
    let diff = (reference - other).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / reference.norm()
    }
}

/// Choice of single-ensemble evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    /// Closed form through the Faddeeva function (co-propagating only).
    #[default]
    Closed,
    /// Gauss–Hermite velocity quadrature (either scheme).
    Quad,
}

/// A ready-to-use single-ensemble evaluator. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Evaluator {
    model: Model,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    Closed,
    Quad { scheme: PropagationScheme, rule: Arc<GaussHermite> },
}

impl Evaluator {
    pub fn closed(model: Model) -> Self {
        Self { model, method: Method::Closed }
    }

    pub fn quadrature(model: Model, scheme: PropagationScheme, nodes: usize) -> Result<Self> {
        if nodes < MIN_QUAD_NODES {
            return Err(Error::invalid("quad_nodes", format!("must be at least {MIN_QUAD_NODES}, got {nodes}")));
        }
        Ok(Self { model, method: Method::Quad { scheme, rule: GaussHermite::cached(nodes) } })
    }

    pub fn from_kind(model: Model, kind: EvaluatorKind, scheme: PropagationScheme, nodes: usize) -> Result<Self> {
        match (kind, scheme) {
            (EvaluatorKind::Closed, PropagationScheme::CoPropagating) => Ok(Self::closed(model)),
            (EvaluatorKind::Closed, PropagationScheme::CounterPropagating) => Err(Error::invalid(
                "evaluator.kind",
                "the closed form covers co-propagating excitation only; use quad for counter_propagating",
            )),
            (EvaluatorKind::Quad, scheme) => Self::quadrature(model, scheme, nodes),
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn kind(&self) -> EvaluatorKind {
        match self.method {
            Method::Closed => EvaluatorKind::Closed,
            Method::Quad { .. } => EvaluatorKind::Quad,
        }
    }

    pub fn amplitude(&self, p: SpectralPoint) -> Complex64 {
        match &self.method {
            Method::Closed => f_doppler_closed(&self.model, p),
            Method::Quad { scheme, rule } => f_doppler_quad(&self.model, p, *scheme, rule),
        }
    }
}

/// The `evaluator` config block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorConfig {
    pub kind: EvaluatorKind,
    pub scheme: PropagationScheme,
    pub quad_nodes: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self { kind: EvaluatorKind::Closed, scheme: PropagationScheme::CoPropagating, quad_nodes: DEFAULT_QUAD_NODES }
    }
}

impl EvaluatorConfig {
    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.kind == EvaluatorKind::Closed && self.scheme == PropagationScheme::CounterPropagating {
            issues.push(Issue::new("kind", "the closed form covers co_propagating only; use quad for counter_propagating"));
        }
        if self.kind == EvaluatorKind::Quad && self.quad_nodes < MIN_QUAD_NODES {
            issues.push(Issue::new("quad_nodes", format!("must be at least {MIN_QUAD_NODES}, got {}", self.quad_nodes)));
        }
        issues
    }

    pub fn build(&self, model: Model) -> Result<Evaluator> {
        Evaluator::from_kind(model, self.kind, self.scheme, self.quad_nodes)
    }
}
