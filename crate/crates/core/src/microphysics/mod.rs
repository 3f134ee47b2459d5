//! Rydberg implementation layer: dipolar exchange, site-selective pulses,
//! leakage, and per-step error and loss budgets.
//!
//! Frequencies are cyclic and given in MHz (the value of `X/2π`), times in
//! μs and lengths in μm unless a field name says otherwise. Hamiltonians
//! are assembled in rad/μs.

mod budget;
mod leakage;
mod lindblad;
mod pulse;

pub use budget::{
    detuning_error_ps, doppler_speed, error_budget, laser_noise_ps, step_budget, Averaging, BudgetEntry,
    DetuningConvention, DetuningDistribution, DetuningErrorModel, ErrorBudget, LossModel, StepBudget, StepBudgetConfig,
};
pub use leakage::{
    contrast_curve, contrast_requirement, family_pair, leakage_infidelity, neighbor_shell, numerical_leakage,
    ContrastPoint, Family, LeakageReport, LeakageTerm, DEFAULT_SHELL,
};
pub use lindblad::{lindblad_evolve, min_eigenvalue};
pub use pulse::{
    hop_detuning, pulse_dynamics, site_selectivity_scan, two_level_peak, Integrator, PulseInitial, PulseOutcome,
    PulseSpec, SiteSelectivity,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

pub(crate) const TWO_PI: f64 = 2.0 * PI;

/// Spherical dipole components `(μ₊, μ₋, μ_z)` of the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleComponents {
    pub first: [C64; 3],
    pub second: [C64; 3],
}

impl Default for DipoleComponents {
    /// A single σ₊/σ₋ channel, for which `C3(φ) = C3(0)(3cos²φ − 1)/2`.
    fn default() -> Self {
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        DipoleComponents { first: [one, zero, zero], second: [zero, -one, zero] }
    }
}

impl DipoleComponents {
    /// Angular sums multiplying `f1`, `f2` and `−f3`.
    fn channels(&self) -> [C64; 3] {
        let [p1, m1, z1] = self.first;
        let [p2, m2, z2] = self.second;
        [p1 * m2 + m1 * p2 + z1 * z2 * 2.0, p1 * z2 - m1 * z2 + z1 * p2 - z1 * m2, p1 * p2 - m1 * m2]
    }

    /// `C3(φ) / C3(0)`.
    pub fn angular_factor(&self, phi: f64) -> Result<f64> {
        let [a, b, c] = self.channels();
        let assemble = |phi: f64| {
            let (s, co) = phi.sin_cos();
            let f1 = (1.0 - 3.0 * co * co) / 2.0;
            let f2 = 3.0 / 2f64.sqrt() * s * co;
            let f3 = 1.5 * s * s;
            a * f1 + b * f2 - c * f3
        };
        let norm = assemble(0.0);
        if norm.norm() < 1e-12 {
            return Err(Error::InvalidParameter("dipole components give C3(0) = 0".into()));
        }
        Ok((assemble(phi) / norm).re)
    }
}

fn default_n() -> u32 {
    70
}
fn default_rabi() -> f64 {
    2.0
}
fn default_gamma_p() -> f64 {
    1.4
}
fn default_delta_p() -> f64 {
    600.0
}
fn default_omega1() -> f64 {
    60.0
}
fn default_omega2() -> f64 {
    40.0
}
fn default_lifetime_exponent() -> f64 {
    -3.0
}
fn default_trap() -> f64 {
    150.0
}
fn default_spread() -> f64 {
    20.0
}
fn default_lattice_constant() -> f64 {
    3.0
}
fn default_linewidth() -> f64 {
    0.5
}
fn default_confinement() -> f64 {
    0.1
}
fn default_coherence_time() -> f64 {
    12.0
}
fn default_mass() -> f64 {
    86.909_180_5
}
fn default_wavelengths() -> [f64; 2] {
    [420.0, 1013.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergParams {
    /// Principal quantum number.
    #[serde(default = "default_n")]
    pub n: u32,
    /// `C3(0)` in GHz·μm³; `8.4 (n/70)³` when absent.
    #[serde(default)]
    pub c3_ghz_um3: Option<f64>,
    /// Two-photon Rabi frequency `Ω/2π`.
    #[serde(default = "default_rabi")]
    pub rabi_mhz: f64,
    /// Laser detuning `Δ/2π`; `−V(a, 0)` when absent.
    #[serde(default)]
    pub detuning_mhz: Option<f64>,
    #[serde(default = "default_gamma_p")]
    pub gamma_p_mhz: f64,
    #[serde(default = "default_delta_p")]
    pub delta_p_mhz: f64,
    #[serde(default = "default_omega1")]
    pub omega1_mhz: f64,
    #[serde(default = "default_omega2")]
    pub omega2_mhz: f64,
    /// Walker lifetime; `450 (n/70)^lifetime_exponent` μs when absent.
    #[serde(default)]
    pub lifetime_us: Option<f64>,
    #[serde(default = "default_lifetime_exponent")]
    pub lifetime_exponent: f64,
    /// Trap frequency `ω_tr/2π`.
    #[serde(default = "default_trap")]
    pub trap_khz: f64,
    #[serde(default = "default_spread")]
    pub ground_spread_nm: f64,
    #[serde(default = "default_lattice_constant")]
    pub lattice_constant_um: f64,
    /// Residual two-photon laser linewidth.
    #[serde(default = "default_linewidth")]
    pub laser_linewidth_khz: f64,
    /// Interaction uncertainty `E_V/Ω` from motion in the trap.
    #[serde(default = "default_confinement")]
    pub confinement_ratio: f64,
    /// Trap-limited coherence time in s.
    #[serde(default = "default_coherence_time")]
    pub coherence_time_s: f64,
    #[serde(default = "default_mass")]
    pub mass_amu: f64,
    /// Excitation laser wavelengths in nm, counter-propagating.
    #[serde(default = "default_wavelengths")]
    pub wavelengths_nm: [f64; 2],
    /// LeRoy radius in nm; `950 (n/70)²` when absent.
    #[serde(default)]
    pub a_min_nm: Option<f64>,
    #[serde(default)]
    pub dipoles: DipoleComponents,
}

impl Default for RydbergParams {
    fn default() -> Self {
        RydbergParams {
            n: default_n(),
            c3_ghz_um3: None,
            rabi_mhz: default_rabi(),
            detuning_mhz: None,
            gamma_p_mhz: default_gamma_p(),
            delta_p_mhz: default_delta_p(),
            omega1_mhz: default_omega1(),
            omega2_mhz: default_omega2(),
            lifetime_us: None,
            lifetime_exponent: default_lifetime_exponent(),
            trap_khz: default_trap(),
            ground_spread_nm: default_spread(),
            lattice_constant_um: default_lattice_constant(),
            laser_linewidth_khz: default_linewidth(),
            confinement_ratio: default_confinement(),
            coherence_time_s: default_coherence_time(),
            mass_amu: default_mass(),
            wavelengths_nm: default_wavelengths(),
            a_min_nm: None,
            dipoles: DipoleComponents::default(),
        }
    }
}

impl RydbergParams {
    fn scale(&self) -> f64 {
        f64::from(self.n) / 70.0
    }

    pub fn c3_ghz(&self) -> f64 {
        self.c3_ghz_um3.unwrap_or(8.4 * self.scale().powi(3))
    }

    pub fn lifetime(&self) -> f64 {
        self.lifetime_us.unwrap_or(450.0 * self.scale().powf(self.lifetime_exponent))
    }

    pub fn a_min_um(&self) -> f64 {
        self.a_min_nm.unwrap_or(950.0 * self.scale().powi(2)) / 1000.0
    }

    /// Exchange strength in MHz.
    pub fn exchange(&self, r: f64, phi: f64) -> Result<f64> {
        if r < self.a_min_um() {
            log::warn!("separation {r} μm is below the LeRoy radius {} μm", self.a_min_um());
        }
        exchange_strength(r, phi, &self.dipoles, self.c3_ghz())
    }

    /// `Δ/2π`, defaulting to resonance with a pair at one lattice constant
    /// along the quantization axis.
    pub fn detuning(&self) -> Result<f64> {
        match self.detuning_mhz {
            Some(d) => Ok(d),
            None => Ok(-self.exchange(self.lattice_constant_um, 0.0)?),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", f64::from(self.n)),
            ("c3_ghz_um3", self.c3_ghz()),
            ("rabi_mhz", self.rabi_mhz),
            ("gamma_p_mhz", self.gamma_p_mhz),
            ("delta_p_mhz", self.delta_p_mhz),
            ("omega1_mhz", self.omega1_mhz),
            ("omega2_mhz", self.omega2_mhz),
            ("lifetime_us", self.lifetime()),
            ("trap_khz", self.trap_khz),
            ("ground_spread_nm", self.ground_spread_nm),
            ("lattice_constant_um", self.lattice_constant_um),
            ("coherence_time_s", self.coherence_time_s),
            ("mass_amu", self.mass_amu),
            ("a_min_nm", self.a_min_um()),
            ("wavelength 1", self.wavelengths_nm[0]),
            ("wavelength 2", self.wavelengths_nm[1]),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in
            [("laser_linewidth_khz", self.laser_linewidth_khz), ("confinement_ratio", self.confinement_ratio)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        self.dipoles.angular_factor(0.0)?;
        let delta = self.detuning()?;
        if delta == 0.0 || self.rabi_mhz / delta.abs() > 0.2 {
            log::warn!("Ω/|Δ| = {} exceeds 0.2", self.rabi_mhz / delta.abs());
        }
        if self.lifetime_us.is_none() && self.lifetime_exponent < 0.0 && self.n != 70 {
            log::warn!(
                "lifetime decreases with n (exponent {}); step counts will not grow with n",
                self.lifetime_exponent
            );
        }
        Ok(())
    }
}

/// `V = C3(φ)/R³` in MHz for `C3(0)` in GHz·μm³ and `R` in μm. `φ` is the
/// angle between the pair axis and the quantization axis.
pub fn exchange_strength(r: f64, phi: f64, dipoles: &DipoleComponents, c3_ghz: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("separation {r} μm")));
    }
    Ok(1000.0 * c3_ghz * dipoles.angular_factor(phi)? / r.powi(3))
}
