use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use super::lindblad::lindblad_evolve;
use super::pulse::{hop_detuning, pulse_dynamics, PulseSpec};
use super::{RydbergParams, TWO_PI};
use crate::error::{Error, Result};
use crate::C64;

const HBAR: f64 = 1.054_571_817e-34;
const AMU: f64 = 1.660_539_066_60e-27;

/// `v = √(ħω_tr / 2m)` in m/s.
pub fn doppler_speed(trap_khz: f64, mass_amu: f64) -> f64 {
    (HBAR * TWO_PI * trap_khz * 1e3 / (2.0 * mass_amu * AMU)).sqrt()
}

/// How a relative detuning error `E/Ω` maps to a detuning spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningConvention {
    /// `E` in rad/μs against `Ω/2π` in MHz: half-width `r (Ω/2π) / 2π` in MHz.
    #[default]
    AngularOverCyclic,
    /// `E` and `Ω` in the same units: half-width `r Ω/2π` in MHz.
    SameUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningDistribution {
    /// Uniform on `[−E, E]`.
    #[default]
    Uniform,
    /// Normal with standard deviation `E`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Averaging {
    /// Midpoint rule.
    Quadrature {
        points: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl Default for Averaging {
    fn default() -> Self {
        Averaging::Quadrature { points: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetuningErrorModel {
    #[serde(default)]
    pub convention: DetuningConvention,
    #[serde(default)]
    pub distribution: DetuningDistribution,
    #[serde(default)]
    pub averaging: Averaging,
}

/// Resonant exchange, Hadamard-step pair detuning and pulse length.
struct HadamardStep {
    exchange: f64,
    pair_detuning: f64,
    duration: f64,
}

impl HadamardStep {
    fn new(params: &RydbergParams) -> Result<Self> {
        params.validate()?;
        let exchange = params.exchange(params.lattice_constant_um, 0.0)?;
        let pair_detuning = hop_detuning(params.rabi_mhz, FRAC_PI_4)?;
        let duration = 1.0 / params.rabi_mhz.hypot(pair_detuning);
        Ok(HadamardStep { exchange, pair_detuning, duration })
    }

    fn spec(&self, params: &RydbergParams, error_mhz: f64) -> PulseSpec {
        PulseSpec {
            duration_us: Some(self.duration),
            samples: 1,
            ..PulseSpec::new(params.rabi_mhz, self.pair_detuning - self.exchange + error_mhz, self.exchange)
        }
    }

    fn state(&self, params: &RydbergParams, error_mhz: f64) -> Result<DVector<C64>> {
        let s = pulse_dynamics(&self.spec(params, error_mhz))?.final_state;
        Ok(DVector::from_row_slice(&s))
    }
}

/// `1 − ⟨|⟨ψ_ideal|ψ_ε⟩|²⟩` for a Hadamard step whose detuning is offset by
/// a random `ε` of relative size `ratio = E/Ω`.
pub fn detuning_error_ps(params: &RydbergParams, ratio: f64, model: &DetuningErrorModel) -> Result<f64> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("detuning error ratio {ratio}")));
    }
    let step = HadamardStep::new(params)?;
    let ideal = step.state(params, 0.0)?;
    let width = match model.convention {
        DetuningConvention::AngularOverCyclic => ratio * params.rabi_mhz / TWO_PI,
        DetuningConvention::SameUnits => ratio * params.rabi_mhz,
    };
    if width == 0.0 {
        return Ok(0.0);
    }
    let fidelity = |eps: f64| step.state(params, eps).map(|psi| ideal.dotc(&psi).norm_sqr());
    let (points, weights): (Vec<f64>, Vec<f64>) = match model.averaging {
        Averaging::Quadrature { points } => {
            let m = points.max(2);
            match model.distribution {
                DetuningDistribution::Uniform => {
                    let h = 2.0 * width / m as f64;
                    ((0..m).map(|i| -width + (i as f64 + 0.5) * h).collect(), vec![1.0 / m as f64; m])
                }
                DetuningDistribution::Gaussian => {
                    let span = 5.0 * width;
                    let h = 2.0 * span / m as f64;
                    let xs: Vec<f64> = (0..m).map(|i| -span + (i as f64 + 0.5) * h).collect();
                    let w: Vec<f64> = xs.iter().map(|x| (-0.5 * (x / width).powi(2)).exp()).collect();
                    let total: f64 = w.iter().sum();
                    (xs, w.into_iter().map(|x| x / total).collect())
                }
            }
        }
        Averaging::MonteCarlo { samples, seed } => {
            let m = samples.max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = match model.distribution {
                DetuningDistribution::Uniform => {
                    let d =
                        Uniform::new_inclusive(-width, width).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    (0..m).map(|_| d.sample(&mut rng)).collect()
                }
                DetuningDistribution::Gaussian => {
                    let d = Normal::new(0.0, width).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    (0..m).map(|_| d.sample(&mut rng)).collect()
                }
            };
            (xs, vec![1.0 / m as f64; m])
        }
    };
    let mut mean = 0.0;
    for (x, w) in points.iter().zip(&weights) {
        mean += w * fidelity(*x)?;
    }
    Ok((1.0 - mean).max(0.0))
}

/// `1 − ⟨ψ_ideal|ρ|ψ_ideal⟩` after a Hadamard step with collapse operators
/// `√γ |s⟩⟨s|` on each atom, `γ = 2π × linewidth`.
pub fn laser_noise_ps(params: &RydbergParams, linewidth_khz: f64) -> Result<f64> {
    if !(linewidth_khz >= 0.0) {
        return Err(Error::InvalidParameter(format!("linewidth {linewidth_khz} kHz")));
    }
    let step = HadamardStep::new(params)?;
    if linewidth_khz == 0.0 {
        return Ok(0.0);
    }
    let spec = step.spec(params, 0.0);
    let ideal = step.state(params, 0.0)?;
    let gamma = TWO_PI * linewidth_khz / 1e3;
    let collapse: Vec<DMatrix<C64>> = [1, 2]
        .iter()
        .map(|&i| {
            let mut l = DMatrix::zeros(4, 4);
            l[(i, i)] = C64::new(gamma.sqrt(), 0.0);
            l
        })
        .collect();
    let mut rho0 = DMatrix::zeros(4, 4);
    rho0[(0, 0)] = C64::new(1.0, 0.0);
    let rho = lindblad_evolve(&spec.hamiltonian(), &collapse, &rho0, step.duration)?;
    let f = (ideal.adjoint() * &rho * &ideal)[(0, 0)].re;
    Ok((1.0 - f).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub source: String,
    pub inputs: BTreeMap<String, f64>,
    pub p_s: f64,
    /// Value quoted for the default parameters.
    pub quoted: Option<f64>,
    /// Set when `p_s` and the quoted value differ by more than a factor 2.
    pub flagged: bool,
    pub note: String,
}

impl BudgetEntry {
    fn new(source: &str, inputs: &[(&str, f64)], p_s: f64, quoted: f64, note: &str) -> Self {
        let r = p_s / quoted;
        BudgetEntry {
            source: source.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            p_s,
            quoted: Some(quoted),
            flagged: !(0.5..=2.0).contains(&r),
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
    pub doppler_speed_mm_s: f64,
    pub step_time_us: f64,
}

impl ErrorBudget {
    pub fn entry(&self, source: &str) -> Option<&BudgetEntry> {
        self.entries.iter().find(|e| e.source == source)
    }
}

/// Per-step dephasing probability of each error source.
pub fn error_budget(params: &RydbergParams, model: &DetuningErrorModel) -> Result<ErrorBudget> {
    let step = HadamardStep::new(params)?;
    let omega = params.rabi_mhz;
    let mut entries = Vec::new();

    let laser = laser_noise_ps(params, params.laser_linewidth_khz)?;
    entries.push(BudgetEntry::new(
        "laser_noise",
        &[("linewidth_khz", params.laser_linewidth_khz), ("rabi_mhz", omega)],
        laser,
        1e-4,
        "Lindblad integration of the Hadamard step",
    ));

    let (o1, o2) = (params.omega1_mhz, params.omega2_mhz);
    let scattering = PI * params.gamma_p_mhz / (2.0 * params.delta_p_mhz) * (o1 / o2 + o2 / o1);
    entries.push(BudgetEntry::new(
        "intermediate_scattering",
        &[
            ("gamma_p_mhz", params.gamma_p_mhz),
            ("delta_p_mhz", params.delta_p_mhz),
            ("omega1_mhz", o1),
            ("omega2_mhz", o2),
        ],
        scattering,
        2.5e-4,
        "closed form π γ_p / 2Δ_p (Ω1/Ω2 + Ω2/Ω1)",
    ));

    let same_units = DetuningErrorModel { convention: DetuningConvention::SameUnits, ..*model };
    let conf = detuning_error_ps(params, params.confinement_ratio, model)?;
    entries.push(BudgetEntry::new(
        "confinement",
        &[
            ("ratio", params.confinement_ratio),
            ("ground_spread_nm", params.ground_spread_nm),
            ("p_s_same_units", detuning_error_ps(params, params.confinement_ratio, &same_units)?),
        ],
        conf,
        2e-4,
        "averaged over the detuning error distribution",
    ));

    let v = doppler_speed(params.trap_khz, params.mass_amu);
    let [l1, l2] = params.wavelengths_nm;
    let doppler_mhz = v * (1.0 / (l1 * 1e-9) - 1.0 / (l2 * 1e-9)).abs() * 1e-6;
    let ratio = doppler_mhz / omega;
    entries.push(BudgetEntry::new(
        "doppler",
        &[
            ("speed_mm_s", v * 1e3),
            ("doppler_mhz", doppler_mhz),
            ("ratio", ratio),
            ("p_s_same_units", detuning_error_ps(params, ratio, &same_units)?),
        ],
        detuning_error_ps(params, ratio, model)?,
        3e-6,
        "averaged over the detuning error distribution",
    ));

    let trap = step.duration / (params.coherence_time_s * 1e6);
    entries.push(BudgetEntry::new(
        "trap_scattering",
        &[("coherence_time_s", params.coherence_time_s), ("step_time_us", step.duration)],
        trap,
        1e-8,
        "step time over coherence time",
    ));

    Ok(ErrorBudget { entries, doppler_speed_mm_s: v * 1e3, step_time_us: step.duration })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    /// `−ln(survival) / (steps · n/70)`, fixed so that `steps · n/70`
    /// steps leave `survival`.
    Calibrated {
        survival: f64,
        steps: f64,
    },
    /// `excited_fraction × t_step / τ`
    Lifetime {
        excited_fraction: f64,
    },
    Fixed {
        loss_per_step: f64,
    },
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel::Calibrated { survival: 0.4, steps: 210.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBudgetConfig {
    /// Per-step operation fidelity.
    pub fidelity: f64,
    #[serde(default)]
    pub loss: LossModel,
    /// Steps to evaluate; `210 n/70` when absent.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Scalar factors such as initialization and detection fidelities.
    #[serde(default)]
    pub multipliers: Vec<f64>,
    /// Survival threshold defining `max_steps`.
    #[serde(default = "default_floor")]
    pub survival_floor: f64,
}

fn default_floor() -> f64 {
    0.4
}

impl Default for StepBudgetConfig {
    fn default() -> Self {
        StepBudgetConfig {
            fidelity: 0.97,
            loss: LossModel::default(),
            steps: None,
            multipliers: Vec::new(),
            survival_floor: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBudget {
    pub loss_per_step: f64,
    pub steps: usize,
    pub survival_probability: f64,
    pub survival_with_multipliers: f64,
    /// Steps before survival drops below the floor; absent without loss.
    pub max_steps: Option<u64>,
    /// `F^steps`
    pub cumulative_fidelity: f64,
    pub step_time_us: f64,
    pub lifetime_us: f64,
    /// Quoted step count `210 n/70` and its survival.
    pub quoted_steps: f64,
    pub quoted_survival: f64,
}

pub fn step_budget(params: &RydbergParams, config: &StepBudgetConfig) -> Result<StepBudget> {
    params.validate()?;
    if !(config.fidelity > 0.0 && config.fidelity <= 1.0) {
        return Err(Error::InvalidParameter(format!("fidelity {}", config.fidelity)));
    }
    if !(config.survival_floor > 0.0 && config.survival_floor < 1.0) {
        return Err(Error::InvalidParameter(format!("survival floor {}", config.survival_floor)));
    }
    let scale = f64::from(params.n) / 70.0;
    let step_time = 1.0 / params.rabi_mhz;
    let lifetime = params.lifetime();
    let loss = match config.loss {
        LossModel::Calibrated { survival, steps } => {
            if !(survival > 0.0 && survival <= 1.0 && steps > 0.0) {
                return Err(Error::InvalidParameter("calibration point".into()));
            }
            -survival.ln() / (steps * scale)
        }
        LossModel::Lifetime { excited_fraction } => excited_fraction * step_time / lifetime,
        LossModel::Fixed { loss_per_step } => loss_per_step,
    };
    if !(loss >= 0.0 && loss.is_finite()) {
        return Err(Error::InvalidParameter(format!("loss per step {loss}")));
    }
    let quoted_steps = 210.0 * scale;
    let steps = config.steps.unwrap_or(quoted_steps.round() as usize);
    let survival = (-loss * steps as f64).exp();
    let factor: f64 = config.multipliers.iter().product();
    Ok(StepBudget {
        loss_per_step: loss,
        steps,
        survival_probability: survival,
        survival_with_multipliers: survival * factor,
        max_steps: (loss > 0.0).then(|| (-config.survival_floor.ln() / loss).floor() as u64),
        cumulative_fidelity: config.fidelity.powi(steps as i32),
        step_time_us: step_time,
        lifetime_us: lifetime,
        quoted_steps,
        quoted_survival: 0.4,
    })
}
