//! Physical inputs and the dimensionless quantities derived from them.
//!
//! Every spectral quantity downstream of this module is expressed in units of
//! the free-space decay rate Γ₃: detunings and frequency shifts are `Δω/Γ₃`,
//! the pulse duration is `Γ₃τ`, and Doppler widths are `kσ/Γ₃`. Conversion
//! from SI happens exactly once, in [`derive`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};

/// Boltzmann constant in J/K (exact since the 2019 SI redefinition).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Unified atomic mass unit in kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of ⁸⁷Rb in unified atomic mass units (AME2016 / Steck, "Rubidium 87 D Line Data").
pub const RB87_MASS_U: f64 = 86.909_180_527;

/// Mass of ⁸⁵Rb in unified atomic mass units (AME2016 / Steck, "Rubidium 85 D Line Data").
pub const RB85_MASS_U: f64 = 84.911_789_738;

/// Mass of ⁸⁷Rb in kg; the default atomic species.
pub const RB87_MASS: f64 = RB87_MASS_U * ATOMIC_MASS_UNIT;

/// Label recorded alongside outputs so the mass choice is visible.
pub const DEFAULT_SPECIES: &str = "Rb-87";

/// Dimensionful description of one thermal ensemble and its excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Signal (telecom, upper transition) wavelength in m.
    pub lambda_s: f64,
    /// Idler (infrared, lower transition) wavelength in m.
    pub lambda_i: f64,
    /// Free-space decay rate Γ₃ in rad/s.
    pub gamma3: f64,
    /// Superradiant enhancement Γ₃ᴺ/Γ₃, never below 1.
    #[serde(rename = "gamma3N_ratio")]
    pub gamma3n_ratio: f64,
    /// Pulse duration in units of 1/Γ₃.
    pub tau_gamma: f64,
    /// Vapor temperature in K.
    pub temperature: f64,
    /// Atomic mass in kg.
    pub atomic_mass: f64,
}

impl Default for PhysicalParams {
    /// Rubidium D1 idler at 795 nm, 1.32 µm signal, Γ₃ᴺ = 5Γ₃, Γ₃τ = 0.25, room temperature.
    fn default() -> Self {
        Self {
            lambda_s: 1.32e-6,
            lambda_i: 795e-9,
            gamma3: 2.0 * std::f64::consts::PI * 5.8e6,
            gamma3n_ratio: 5.0,
            tau_gamma: 0.25,
            temperature: 300.0,
            atomic_mass: RB87_MASS,
        }
    }
}

impl PhysicalParams {
    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// All violated invariants, in field order. Empty when valid.
    pub fn issues(&self) -> Vec<Issue> {
        let fields = [
            ("lambda_s", self.lambda_s),
            ("lambda_i", self.lambda_i),
            ("gamma3", self.gamma3),
            ("gamma3N_ratio", self.gamma3n_ratio),
            ("tau_gamma", self.tau_gamma),
            ("temperature", self.temperature),
            ("atomic_mass", self.atomic_mass),
        ];
        let mut issues = Vec::new();
        for (name, value) in fields {
            if !value.is_finite() {
                issues.push(Issue::new(name, format!("must be finite, got {value}")));
            } else if value <= 0.0 {
                issues.push(Issue::new(name, format!("must be strictly positive, got {value}")));
            } else if name == "gamma3N_ratio" && value < 1.0 {
                issues.push(Issue::new(name, format!("superradiant rate cannot be sub-natural, got {value} < 1")));
            }
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
}

/// Quantities precomputed from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Signal wavenumber 2π/λ_s in rad/m.
    pub k_s: f64,
    /// Idler wavenumber 2π/λ_i in rad/m.
    pub k_i: f64,
    /// k_s + k_i in rad/m.
    pub k_bar_si: f64,
    /// One-dimensional thermal velocity spread √(k_B T/m) in m/s.
    pub sigma_v: f64,
    /// Doppler mixing parameter k̄²/(k̄² + 4/(στ)²), in (0, 1).
    pub b: f64,
    /// k_s σ/Γ₃.
    pub doppler_width_s: f64,
    /// k_i σ/Γ₃.
    pub doppler_width_i: f64,
}

/// Convert validated physical inputs to the dimensionless working set.
pub fn derive(params: &PhysicalParams) -> Result<DerivedParams> {
    params.validate()?;
    let k_s = 2.0 * std::f64::consts::PI / params.lambda_s;
    let k_i = 2.0 * std::f64::consts::PI / params.lambda_i;
    let k_bar_si = k_s + k_i;
    let sigma_v = (BOLTZMANN * params.temperature / params.atomic_mass).sqrt();
    // k̄στ is dimensionless; τ in seconds is (Γ₃τ)/Γ₃.
    let x = k_bar_si * sigma_v * params.tau_gamma / params.gamma3;
    let x2 = x * x;
    Ok(DerivedParams {
        k_s,
        k_i,
        k_bar_si,
        sigma_v,
        b: x2 / (x2 + 4.0),
        doppler_width_s: k_s * sigma_v / params.gamma3,
        doppler_width_i: k_i * sigma_v / params.gamma3,
    })
}

/// Validated physical and derived parameters, bundled for the spectral evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Model {
    pub physical: PhysicalParams,
    pub derived: DerivedParams,
}

impl Model {
    pub fn new(physical: PhysicalParams) -> Result<Self> {
        let derived = derive(&physical)?;
        Ok(Self { physical, derived })
    }

    /// Γ₃τ.
    pub fn tau(&self) -> f64 {
        self.physical.tau_gamma
    }

    /// Γ₃ᴺ/Γ₃.
    pub fn gamma_n(&self) -> f64 {
        self.physical.gamma3n_ratio
    }

    /// k_i/k̄_si.
    pub fn idler_fraction(&self) -> f64 {
        self.derived.k_i / self.derived.k_bar_si
    }

    /// Largest single-axis Doppler width, used for window margins.
    pub fn doppler_margin(&self) -> f64 {
        self.derived.doppler_width_s.max(self.derived.doppler_width_i)
    }
}

impl Default for Model {
    fn default() -> Self {
        Self::new(PhysicalParams::default()).expect("default parameters are valid")
    }
}
