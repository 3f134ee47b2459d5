//! Density-matrix evolution under stroboscopic dephasing.
//!
//! A channel step applies a unitary and then scales every off-diagonal
//! element by `1 − P_s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::walk::{CompiledProgram, Tessellation, WalkerState};
use crate::C64;

/// Dense Hermitian matrix over sites, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_state(state: &WalkerState) -> Self {
        let a = state.amplitudes();
        let n = a.len();
        let mut data = Vec::with_capacity(n * n);
        for x in a {
            for y in a {
                data.push(x * y.conj());
            }
        }
        DensityMatrix { n, data }
    }

    pub fn localized(n: usize, site: usize) -> Self {
        Self::from_state(&WalkerState::basis(n, site))
    }

    /// Checked construction from row-major data.
    pub fn from_rows(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let rho = DensityMatrix { n, data };
        if rho.hermiticity_error() > 1e-12 {
            return Err(Error::InvalidParameter("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {} != 1", rho.trace())));
        }
        if rho.min_diagonal() < -1e-12 {
            return Err(Error::InvalidParameter("negative population".into()));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).re).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    pub fn min_diagonal(&self) -> f64 {
        self.diagonal().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `max |ρ_ij − conj(ρ_ji)|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `ρ → W ρ W†` for the rotation `W` of `t`.
    pub fn apply_tessellation(&mut self, t: &Tessellation, exec: Exec) {
        // Right-multiply by W†, take the adjoint (giving W ρ), and repeat.
        self.right_mul_adjoint(t, exec);
        self.adjoint_in_place(exec);
        self.right_mul_adjoint(t, exec);
    }

    fn right_mul_adjoint(&mut self, t: &Tessellation, exec: Exec) {
        let rot: Vec<(usize, usize, f64, f64)> = t.rotations().collect();
        par::for_each_chunk_mut(exec, &mut self.data, self.n, |_, row| {
            for &(u, v, c, s) in &rot {
                let (a, b) = (row[u], row[v]);
                let mis = C64::new(0.0, -s);
                row[u] = a * c + mis * b;
                row[v] = mis * a + b * c;
            }
        });
    }

    fn adjoint_in_place(&mut self, exec: Exec) {
        let n = self.n;
        let old = &self.data;
        let rows = par::map_range(exec, n, |i| (0..n).map(|j| old[j * n + i].conj()).collect::<Vec<_>>());
        self.data = rows.concat();
    }

    /// Multiply every off-diagonal element by `keep`.
    pub fn scale_coherences(&mut self, keep: f64, exec: Exec) {
        par::for_each_chunk_mut(exec, &mut self.data, self.n, |i, row| {
            for (j, x) in row.iter_mut().enumerate() {
                if i != j {
                    *x *= keep;
                }
            }
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    p_s: f64,
}

impl DephasingModel {
    pub fn new(p_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_s) {
            return Err(Error::InvalidParameter(format!("dephasing probability {p_s} outside [0, 1]")));
        }
        Ok(DephasingModel { p_s })
    }

    pub fn p_s(&self) -> f64 {
        self.p_s
    }
}

/// When the channel acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSchedule {
    /// After every tessellation; a step is one tessellation.
    #[default]
    PerTessellation,
    /// Once per program period; a step is one period.
    PerPeriod,
}

/// Apply the tessellations in order, then dephase once.
pub fn channel_step(rho: &mut DensityMatrix, unitary: &[Tessellation], model: &DephasingModel, exec: Exec) {
    for t in unitary {
        rho.apply_tessellation(t, exec);
    }
    if model.p_s > 0.0 {
        rho.scale_coherences(1.0 - model.p_s, exec);
    }
}

/// Evolve `rho` for `steps` channel steps, calling `observe(step, ρ)` after
/// each one (and once with step 0 before the first).
pub fn evolve(
    rho: &mut DensityMatrix,
    program: &CompiledProgram,
    model: &DephasingModel,
    schedule: ChannelSchedule,
    steps: usize,
    exec: Exec,
    mut observe: impl FnMut(usize, &DensityMatrix),
) -> Result<()> {
    if rho.dim() != program.n_sites() {
        return Err(Error::DimensionMismatch { expected: program.n_sites(), got: rho.dim() });
    }
    let tess = program.tessellations();
    observe(0, rho);
    for step in 1..=steps {
        match schedule {
            ChannelSchedule::PerPeriod => channel_step(rho, tess, model, exec),
            ChannelSchedule::PerTessellation => {
                if !tess.is_empty() {
                    let t = &tess[(step - 1) % tess.len()];
                    channel_step(rho, std::slice::from_ref(t), model, exec);
                }
            }
        }
        observe(step, rho);
    }
    Ok(())
}

/// `Σ_x ρ(x,x) (x − center)²` in site units.
pub fn mean_square_displacement(rho: &DensityMatrix, center: usize) -> f64 {
    rho.diagonal()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = i as f64 - center as f64;
            p * x * x
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CoherenceLength {
    /// No suppression relative to the ideal walk.
    Unbounded,
    Finite(f64),
    /// All anti-diagonal coherences vanished.
    Collapsed,
}

/// Coherences below this magnitude in the ideal walk are not fitted.
pub const COHERENCE_FLOOR: f64 = 1e-8;

/// Decay length of `|ρ(x,−x)| / |ρ₀(x,−x)|` around `center`, from a
/// least-squares fit of the log ratio against `x` through the origin.
pub fn coherence_length(rho: &DensityMatrix, ideal: &DensityMatrix, center: usize) -> Result<CoherenceLength> {
    if rho.dim() != ideal.dim() {
        return Err(Error::DimensionMismatch { expected: ideal.dim(), got: rho.dim() });
    }
    let n = rho.dim();
    let mut usable = 0usize;
    let mut vanished = 0usize;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for x in 1..=center.min(n - 1 - center) {
        let (i, j) = (center + x, center - x);
        let r0 = ideal.get(i, j).norm();
        if r0 <= COHERENCE_FLOOR {
            continue;
        }
        usable += 1;
        let ratio = rho.get(i, j).norm() / r0;
        if ratio < 1e-14 {
            vanished += 1;
            continue;
        }
        let xf = x as f64;
        sxy += xf * ratio.ln();
        sxx += xf * xf;
    }
    if usable < 3 {
        return Err(Error::FitFailure(format!("{usable} usable anti-diagonal points, need 3")));
    }
    if vanished == usable {
        return Ok(CoherenceLength::Collapsed);
    }
    let slope = sxy / sxx;
    if slope > -1e-12 {
        return Ok(CoherenceLength::Unbounded);
    }
    Ok(CoherenceLength::Finite(-1.0 / slope))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub prefactor: f64,
    pub points: usize,
}

/// Log-log regression over points with `lo <= t < hi`.
pub fn power_law_fit(series: &[(f64, f64)], lo: f64, hi: f64) -> Result<PowerLaw> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, y)| *t >= lo && *t < hi && *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::FitFailure(format!("{} points in [{lo}, {hi}), need 4", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("all points at the same abscissa".into()));
    }
    let exponent = sxy / sxx;
    Ok(PowerLaw { exponent, prefactor: (my - exponent * mx).exp(), points: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportFit {
    pub ballistic_exponent: f64,
    pub diffusive_exponent: f64,
    /// `c` in `⟨x²⟩ ≈ c (γt)²` fitted on the ballistic branch.
    pub quadratic_coefficient: f64,
}

/// Split a `(γt, ⟨x²⟩)` series at `γt = 1` and fit each regime.
pub fn transport_fit(series: &[(f64, f64)]) -> Result<TransportFit> {
    let ballistic = power_law_fit(series, 0.0, 1.0)?;
    let diffusive = power_law_fit(series, 1.0, f64::INFINITY)?;
    Ok(TransportFit {
        ballistic_exponent: ballistic.exponent,
        diffusive_exponent: diffusive.exponent,
        quadratic_coefficient: quadratic_coefficient(series, 1.0),
    })
}

/// Least-squares `c` for `y = c t²` over `0 < t < t_max`.
pub fn quadratic_coefficient(series: &[(f64, f64)], t_max: f64) -> f64 {
    let (num, den) = series
        .iter()
        .filter(|(t, _)| *t > 0.0 && *t < t_max)
        .fold((0.0, 0.0), |(n, d), (t, y)| (n + y * t * t, d + t.powi(4)));
    num / den
}
