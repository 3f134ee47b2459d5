use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::C64;

const TRACE_TOLERANCE: f64 = 1e-8;

fn generator(h: &DMatrix<C64>, ls: &[DMatrix<C64>], damp: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let mi = C64::new(0.0, -1.0);
    let mut out = (h * rho - rho * h) * mi;
    for l in ls {
        out += l * rho * l.adjoint();
    }
    out -= (damp * rho + rho * damp) * C64::new(0.5, 0.0);
    out
}

/// Integrates `dρ/dt = −i[H, ρ] + Σ LρL† − ½{L†L, ρ}` over `[0, t]` with
/// fourth-order Runge–Kutta, rates in rad/μs.
pub fn lindblad_evolve(
    h: &DMatrix<C64>,
    collapse: &[DMatrix<C64>],
    rho0: &DMatrix<C64>,
    t: f64,
) -> Result<DMatrix<C64>> {
    let n = h.nrows();
    if h.ncols() != n || rho0.shape() != (n, n) || collapse.iter().any(|l| l.shape() != (n, n)) {
        return Err(Error::DimensionMismatch { expected: n, got: rho0.nrows() });
    }
    let damp = collapse.iter().fold(DMatrix::zeros(n, n), |acc, l| acc + l.adjoint() * l);
    let bound = h.norm() + damp.norm();
    let steps = ((bound * t / 0.01).ceil() as usize).max(1);
    let dt = C64::new(t / steps as f64, 0.0);
    let half = dt * 0.5;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = generator(h, collapse, &damp, &rho);
        let k2 = generator(h, collapse, &damp, &(&rho + &k1 * half));
        let k3 = generator(h, collapse, &damp, &(&rho + &k2 * half));
        let k4 = generator(h, collapse, &damp, &(&rho + &k3 * dt));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (dt / 6.0);
    }
    let drift = (rho.trace() - rho0.trace()).norm();
    if drift > TRACE_TOLERANCE {
        return Err(Error::Integration(format!("trace drifted by {drift:e}")));
    }
    let low = min_eigenvalue(&rho);
    if low < -TRACE_TOLERANCE {
        return Err(Error::Integration(format!("density matrix lost positivity ({low:e})")));
    }
    Ok(rho)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
