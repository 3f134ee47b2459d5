use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{floquet_with_derivative, pauli_components, quasienergy, Frame, Mat2};
use crate::error::{Error, GapCenter, Result};
use crate::C64;

pub const DEFAULT_K_GRID: usize = 2048;
pub const QUANTIZATION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub value: i32,
    pub raw: f64,
    pub residual: f64,
}

/// Smallest `|E|` and `π − |E|` over the band, from its extremes at
/// `k = 0` and `k = π`.
pub(crate) fn chain_gaps(theta0: f64, theta1: f64) -> (f64, f64) {
    let e0 = quasienergy(0.0, theta0, theta1);
    let epi = quasienergy(PI, theta0, theta1);
    (e0.min(epi), PI - e0.max(epi))
}

fn check_gaps(theta0: f64, theta1: f64) -> Result<()> {
    let (g0, gpi) = chain_gaps(theta0, theta1);
    if g0 < super::GAP_TOLERANCE {
        return Err(Error::GapClosed { gap: g0, at: GapCenter::Zero });
    }
    if gpi < super::GAP_TOLERANCE {
        return Err(Error::GapClosed { gap: gpi, at: GapCenter::Pi });
    }
    Ok(())
}

/// Conjugate by `D(k)† · D(k)` with `D = diag(e^{ikā/2}, e^{−ikā/2})`,
/// removing the `ā`-dependent phases so the operator is 2π-periodic in `k`.
fn periodic_gauge(k: f64, abar: f64, w: &Mat2, dw: &Mat2) -> (Mat2, Mat2) {
    let p = C64::from_polar(1.0, k * abar);
    // (D† M D)_{01} = e^{-ikā} M_{01}, (D† M D)_{10} = e^{ikā} M_{10}.
    let conj = |m: &Mat2| {
        let mut r = *m;
        r[(0, 1)] = m[(0, 1)] * p.conj();
        r[(1, 0)] = m[(1, 0)] * p;
        r
    };
    let wp = conj(w);
    // Derivative picks up −iā on the upper and +iā on the lower off-diagonal.
    let mut dwp = conj(dw);
    dwp[(0, 1)] += wp[(0, 1)] * C64::new(0.0, -abar);
    dwp[(1, 0)] += wp[(1, 0)] * C64::new(0.0, abar);
    (wp, dwp)
}

/// Winding of `n(k)` around the origin of the `(n_x, n_y)` plane for a
/// chiral-symmetric frame, by trapezoid integration of
/// `(n_x ∂n_y − n_y ∂n_x) / |n|²` over `grid` momenta.
///
/// The integral is evaluated in the periodic gauge, which makes it
/// independent of `ā`.
pub fn winding_number(theta0: f64, theta1: f64, abar: f64, frame: Frame, grid: usize) -> Result<Winding> {
    if frame == Frame::Plain {
        return Err(Error::InvalidParameter("the plain frame has no chiral symmetry".into()));
    }
    if grid < 4 {
        return Err(Error::InvalidParameter(format!("k grid of {grid} points")));
    }
    check_gaps(theta0, theta1)?;
    let dk = 2.0 * PI / grid as f64;
    let mut sum = 0.0;
    for l in 0..grid {
        let k = l as f64 * dk;
        let (w, dw) = floquet_with_derivative(k, theta0, theta1, abar, frame);
        let (w, dw) = periodic_gauge(k, abar, &w, &dw);
        let v = pauli_components(&w);
        let dv = pauli_components(&dw);
        sum += (v[0] * dv[1] - v[1] * dv[0]) / (v[0] * v[0] + v[1] * v[1]);
    }
    let raw = sum * dk / (2.0 * PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= QUANTIZATION_TOLERANCE {
        return Err(Error::NotQuantized { raw, residual });
    }
    Ok(Winding { value: value as i32, raw, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub nu: Winding,
    pub nu_prime: Winding,
    /// `(ν + ν′)/2`, classifies the gap at `E = 0`.
    pub nu_zero: i32,
    /// `(ν − ν′)/2`, classifies the gap at `E = π`.
    pub nu_pi: i32,
}

pub fn invariants(theta0: f64, theta1: f64, abar: f64, grid: usize) -> Result<Invariants> {
    let nu = winding_number(theta0, theta1, abar, Frame::Symmetric0, grid)?;
    let nu_prime = winding_number(theta0, theta1, abar, Frame::Symmetric1, grid)?;
    let (s, d) = (nu.value + nu_prime.value, nu.value - nu_prime.value);
    if s % 2 != 0 {
        return Err(Error::NotQuantized { raw: f64::from(s) / 2.0, residual: 0.5 });
    }
    Ok(Invariants { nu, nu_prime, nu_zero: s / 2, nu_pi: d / 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_frame_rejected() {
        assert!(winding_number(0.3, 1.2, 0.5, Frame::Plain, 256).is_err());
    }

    #[test]
    fn closed_gap_rejected() {
        assert!(matches!(
            winding_number(0.8, 0.8, 0.5, Frame::Symmetric0, 256),
            Err(Error::GapClosed { at: GapCenter::Zero, .. })
        ));
        assert!(matches!(
            winding_number(2.0, PI - 2.0, 0.5, Frame::Symmetric0, 256),
            Err(Error::GapClosed { at: GapCenter::Pi, .. })
        ));
    }

    #[test]
    fn decoupled_dimers_are_trivial() {
        let w = winding_number(1.0, 0.0, 0.5, Frame::Symmetric0, 64).unwrap();
        assert_eq!(w.value, 0);
    }
}
