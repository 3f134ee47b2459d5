use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::{RydbergParams, TWO_PI};
use crate::error::{Error, Result};
use crate::lattice::SiteTable;
use crate::par::{self, Exec};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact propagation in the eigenbasis of the Hamiltonian.
    #[default]
    Spectral,
    /// Fixed-step fourth-order Runge–Kutta.
    Rk4,
}

/// Two-site starting state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseInitial {
    /// `|p g⟩`, the walker on the first site.
    #[default]
    Walker,
    /// `(|p g⟩ + |g p⟩)/√2`, the exchange-symmetric pair state.
    Bright,
}

/// Two-site 2π pulse in the basis `{|pg⟩, |ps⟩, |sp⟩, |gp⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub omega_mhz: f64,
    pub detuning_mhz: f64,
    pub exchange_mhz: f64,
    #[serde(default)]
    pub initial: PulseInitial,
    #[serde(default)]
    pub integrator: Integrator,
    /// Pulse length; `1/√(Ω² + δ²)` μs when absent.
    #[serde(default)]
    pub duration_us: Option<f64>,
    /// Time samples used for the population maximum.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2000
}

impl PulseSpec {
    pub fn new(omega_mhz: f64, detuning_mhz: f64, exchange_mhz: f64) -> Self {
        PulseSpec {
            omega_mhz,
            detuning_mhz,
            exchange_mhz,
            initial: PulseInitial::Walker,
            integrator: Integrator::Spectral,
            duration_us: None,
            samples: default_samples(),
        }
    }

    /// `δ = Δ + V`, the detuning of the symmetric pair excitation.
    pub fn pair_detuning(&self) -> f64 {
        self.detuning_mhz + self.exchange_mhz
    }

    pub fn duration(&self) -> f64 {
        self.duration_us.unwrap_or_else(|| 1.0 / self.omega_mhz.hypot(self.pair_detuning()))
    }

    /// Hamiltonian in rad/μs.
    pub fn hamiltonian(&self) -> DMatrix<C64> {
        let half = C64::new(TWO_PI * self.omega_mhz / 2.0, 0.0);
        let v = C64::new(TWO_PI * self.exchange_mhz, 0.0);
        let d = C64::new(TWO_PI * self.detuning_mhz, 0.0);
        let z = C64::new(0.0, 0.0);
        DMatrix::from_row_slice(4, 4, &[z, half, z, z, half, d, v, z, z, v, d, half, z, z, half, z])
    }

    fn initial_state(&self) -> DVector<C64> {
        let mut psi = DVector::zeros(4);
        match self.initial {
            PulseInitial::Walker => psi[0] = C64::new(1.0, 0.0),
            PulseInitial::Bright => {
                psi[0] = C64::new(FRAC_1_SQRT_2, 0.0);
                psi[3] = C64::new(FRAC_1_SQRT_2, 0.0);
            }
        }
        psi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseOutcome {
    /// `arcsin |⟨g p|ψ(t)⟩|`
    pub theta_hop: f64,
    /// Peak of `|⟨ps|ψ⟩|² + |⟨sp|ψ⟩|²` during the pulse.
    pub max_s_population: f64,
    pub duration_us: f64,
    pub final_state: [C64; 4],
    pub norm_error: f64,
}

const NORM_TOLERANCE: f64 = 1e-10;

/// Propagates `ψ0` under `H` over `[0, t]`, calling `observe` at
/// `samples + 1` equally spaced times including both ends.
pub(crate) fn propagate(
    h: &DMatrix<C64>,
    psi0: &DVector<C64>,
    t: f64,
    samples: usize,
    integrator: Integrator,
    mut observe: impl FnMut(usize, &DVector<C64>),
) -> Result<DVector<C64>> {
    let samples = samples.max(1);
    let dt = t / samples as f64;
    let mut psi = psi0.clone();
    observe(0, &psi);
    match integrator {
        Integrator::Spectral => {
            let eig = SymmetricEigen::new(h.clone());
            let u = &eig.eigenvectors;
            let c = u.adjoint() * psi0;
            for m in 1..=samples {
                let tm = dt * m as f64;
                let phased = DVector::from_iterator(
                    c.len(),
                    c.iter().zip(eig.eigenvalues.iter()).map(|(ci, &e)| ci * C64::from_polar(1.0, -e * tm)),
                );
                psi = u * phased;
                observe(m, &psi);
            }
        }
        Integrator::Rk4 => {
            let bound = h.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
            let sub = ((bound * dt / 0.005).ceil() as usize).max(1);
            let step = dt / sub as f64;
            let mi = C64::new(0.0, -1.0);
            let f = |y: &DVector<C64>| (h * y) * mi;
            for m in 1..=samples {
                for _ in 0..sub {
                    let k1 = f(&psi);
                    let k2 = f(&(&psi + &k1 * C64::new(step / 2.0, 0.0)));
                    let k3 = f(&(&psi + &k2 * C64::new(step / 2.0, 0.0)));
                    let k4 = f(&(&psi + &k3 * C64::new(step, 0.0)));
                    psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(step / 6.0, 0.0);
                }
                observe(m, &psi);
            }
        }
    }
    let err = (psi.norm_squared() - psi0.norm_squared()).abs();
    if err > NORM_TOLERANCE {
        return Err(Error::Integration(format!("norm drifted by {err:e}")));
    }
    Ok(psi)
}

pub fn pulse_dynamics(spec: &PulseSpec) -> Result<PulseOutcome> {
    if !(spec.omega_mhz > 0.0) {
        return Err(Error::InvalidParameter(format!("Rabi frequency {} MHz", spec.omega_mhz)));
    }
    let t = spec.duration();
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("pulse duration {t} μs")));
    }
    let psi0 = spec.initial_state();
    let mut max_s = 0.0f64;
    let psi = propagate(&spec.hamiltonian(), &psi0, t, spec.samples, spec.integrator, |_, psi| {
        max_s = max_s.max(psi[1].norm_sqr() + psi[2].norm_sqr());
    })?;
    Ok(PulseOutcome {
        theta_hop: psi[3].norm().min(1.0).asin(),
        max_s_population: max_s,
        duration_us: t,
        final_state: [psi[0], psi[1], psi[2], psi[3]],
        norm_error: (psi.norm_squared() - 1.0).abs(),
    })
}

/// Peak excited population `Ω²/(Ω² + δ²)` of a two-level atom.
pub fn two_level_peak(omega: f64, delta: f64) -> f64 {
    omega * omega / (omega * omega + delta * delta)
}

/// Pair detuning `δ` that gives hop angle `θ ∈ (0, π/2]` when the
/// antisymmetric branch is far detuned, from `sin θ = |cos(πδ / 2Ω_eff)|`.
pub fn hop_detuning(omega: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("hop angle {theta}")));
    }
    let u = 1.0 - 2.0 * theta / std::f64::consts::PI;
    Ok(omega * u / (1.0 - u * u).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteSelectivity {
    pub site: usize,
    pub distance_um: f64,
    /// Angle to the quantization axis (lattice x).
    pub phi: f64,
    pub exchange_mhz: f64,
    pub delta_mhz: f64,
    pub max_s_population: f64,
    /// `Ω²/(Ω² + δ²)`
    pub two_level: f64,
}

/// Peak auxiliary-state population of every other site paired with the
/// walker, for one pulse tuned to the resonant lattice constant. Each pair
/// starts in its exchange-symmetric state, the component the laser drives.
pub fn site_selectivity_scan(
    table: &SiteTable,
    walker: usize,
    params: &RydbergParams,
    exec: Exec,
) -> Result<Vec<SiteSelectivity>> {
    if walker >= table.len() {
        return Err(Error::SiteOutOfRange { index: walker, len: table.len() });
    }
    params.validate()?;
    let detuning = params.detuning()?;
    let omega = params.rabi_mhz;
    let duration = 1.0 / omega.hypot(detuning + params.exchange(params.lattice_constant_um, 0.0)?);
    let others: Vec<usize> = (0..table.len()).filter(|&k| k != walker).collect();
    let origin = table.site(walker).position;
    par::map(exec, &others, |&k| {
        let p = table.site(k).position;
        let d = [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let phi = (d[0] / r).clamp(-1.0, 1.0).acos();
        let v = params.exchange(r, phi)?;
        let spec = PulseSpec {
            initial: PulseInitial::Bright,
            duration_us: Some(duration),
            ..PulseSpec::new(omega, detuning, v)
        };
        let out = pulse_dynamics(&spec)?;
        Ok(SiteSelectivity {
            site: k,
            distance_um: r,
            phi,
            exchange_mhz: v,
            delta_mhz: detuning + v,
            max_s_population: out.max_s_population,
            two_level: two_level_peak(omega, detuning + v),
        })
    })
    .into_iter()
    .collect()
}
