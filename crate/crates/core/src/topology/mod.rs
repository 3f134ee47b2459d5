//! Two-band Floquet analysis of the walk in momentum space.
//!
//! Operators act on the `{odd, even}` sublattice basis. For a chain with
//! inter-bond fraction `ā = a1 / (a0 + a1)`:
//!
//! ```text
//! H0(k) = [[0, e^{ikā}], [e^{-ikā}, 0]]
//! H1(k) = [[0, e^{-ik(1-ā)}], [e^{ik(1-ā)}, 0]]
//! ```
//!
//! Both square to the identity, so `exp(iθH) = cos θ + i sin θ H` exactly.

mod chern;
mod gap;
mod protocol;
mod winding;

pub use chern::{chern_number, chern_riemann, Band, Chern};
pub use gap::{gap_map, phase_diagram, square_grid, GapPoint, GapProtocol, PhasePoint, GAP_TOLERANCE};
pub use protocol::{CoinedProtocol, ProtocolStep};
pub use winding::{invariants, winding_number, Invariants, Winding, DEFAULT_K_GRID, QUANTIZATION_TOLERANCE};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

pub type Mat2 = Matrix2<C64>;

const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0))
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0))
}

/// `exp(iθh)` for `h` with `h² = 1`.
pub fn rotation(theta: f64, h: &Mat2) -> Mat2 {
    let (s, c) = theta.sin_cos();
    identity() * C64::new(c, 0.0) + h * (I * s)
}

/// Off-diagonal Hermitian matrix with upper entry `e^{iφ}`.
fn offdiag(phi: f64) -> Mat2 {
    let z = C64::from_polar(1.0, phi);
    Mat2::new(C64::new(0.0, 0.0), z, z.conj(), C64::new(0.0, 0.0))
}

/// Intra- and inter-dimer Bloch Hamiltonians at `k`.
pub fn bloch_hamiltonians(k: f64, abar: f64) -> (Mat2, Mat2) {
    (offdiag(k * abar), offdiag(-k * (1.0 - abar)))
}

fn bloch_hamiltonian_derivatives(k: f64, abar: f64) -> (Mat2, Mat2) {
    let d = |phi: f64, rate: f64| {
        let z = C64::from_polar(1.0, phi) * I * rate;
        Mat2::new(C64::new(0.0, 0.0), z, z.conj(), C64::new(0.0, 0.0))
    };
    (d(k * abar, abar), d(-k * (1.0 - abar), -(1.0 - abar)))
}

/// Time frame of the one-period operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `e^{iθ0/2 H0} e^{iθ1 H1} e^{iθ0/2 H0}`
    Symmetric0,
    /// `e^{iθ1/2 H1} e^{iθ0 H0} e^{iθ1/2 H1}`
    Symmetric1,
    /// `e^{iθ1 H1} e^{iθ0 H0}`
    Plain,
}

pub fn floquet_operator(k: f64, theta0: f64, theta1: f64, abar: f64, frame: Frame) -> Mat2 {
    let (h0, h1) = bloch_hamiltonians(k, abar);
    match frame {
        Frame::Symmetric0 => {
            let a = rotation(theta0 / 2.0, &h0);
            a * rotation(theta1, &h1) * a
        }
        Frame::Symmetric1 => {
            let b = rotation(theta1 / 2.0, &h1);
            b * rotation(theta0, &h0) * b
        }
        Frame::Plain => rotation(theta1, &h1) * rotation(theta0, &h0),
    }
}

/// `(W, dW/dk)`.
pub(crate) fn floquet_with_derivative(k: f64, theta0: f64, theta1: f64, abar: f64, frame: Frame) -> (Mat2, Mat2) {
    let (h0, h1) = bloch_hamiltonians(k, abar);
    let (d0, d1) = bloch_hamiltonian_derivatives(k, abar);
    // d/dk exp(iθh(k)) = i sin θ h'(k) when h² = 1 for all k.
    let rd = |t: f64, d: &Mat2| d * (I * t.sin());
    let (a, da, b, db) = match frame {
        Frame::Symmetric0 => {
            (rotation(theta0 / 2.0, &h0), rd(theta0 / 2.0, &d0), rotation(theta1, &h1), rd(theta1, &d1))
        }
        Frame::Symmetric1 => {
            (rotation(theta1 / 2.0, &h1), rd(theta1 / 2.0, &d1), rotation(theta0, &h0), rd(theta0, &d0))
        }
        Frame::Plain => {
            let (a, da) = (rotation(theta1, &h1), rd(theta1, &d1));
            let (b, db) = (rotation(theta0, &h0), rd(theta0, &d0));
            return (a * b, da * b + a * db);
        }
    };
    (a * b * a, da * b * a + a * db * a + a * b * da)
}

/// Principal quasi-energy `E ∈ [0, π]`; the bands are `±E`, with
/// `cos E = cos θ0 cos θ1 − sin θ0 sin θ1 cos k`.
///
/// Evaluated as `2 atan2(√(1 − cos E), √(1 + cos E))` with both radicands
/// written as sums of non-negative terms, which keeps full precision where
/// the bands touch.
pub fn quasienergy(k: f64, theta0: f64, theta1: f64) -> f64 {
    let s = theta0.sin() * theta1.sin();
    let (sk, ck) = ((k / 2.0).sin().powi(2), (k / 2.0).cos().powi(2));
    let half = |x: f64| ((x / 2.0).sin().powi(2), (x / 2.0).cos().powi(2));
    let (sm, cm) = half(theta0 - theta1);
    let (sp, cp) = half(theta0 + theta1);
    let (one_minus, one_plus) =
        if s >= 0.0 { (2.0 * (sm + s * ck), 2.0 * (cp + s * sk)) } else { (2.0 * (sp - s * sk), 2.0 * (cm - s * ck)) };
    2.0 * one_minus.max(0.0).sqrt().atan2(one_plus.max(0.0).sqrt())
}

/// Eigenphases of a 2×2 unitary, each in `(−π, π]`, sorted ascending.
///
/// `W = e^{iα}(cos E + i sin E n·σ)` with `e^{2iα} = det W`; `E` comes from
/// `atan2` so that nearly degenerate pairs stay accurate.
pub fn eigenphases(w: &Mat2) -> [f64; 2] {
    let alpha = 0.5 * w.determinant().arg();
    let su = w * C64::from_polar(1.0, -alpha);
    let v = pauli_components(&su);
    let e = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().atan2(0.5 * (su[(0, 0)] + su[(1, 1)]).re);
    let wrap = |x: f64| {
        let y = (x + PI).rem_euclid(2.0 * PI) - PI;
        if y == -PI {
            PI
        } else {
            y
        }
    };
    let mut p = [wrap(alpha - e), wrap(alpha + e)];
    p.sort_by(f64::total_cmp);
    p
}

/// Coefficients of `(W − W†)/2i` on the Pauli matrices. For an SU(2)
/// operator `W = cos E + i sin E n·σ` this is `sin E · n`.
pub fn pauli_components(w: &Mat2) -> [f64; 3] {
    let m = (w - w.adjoint()) / (I * 2.0);
    [m[(0, 1)].re, -m[(0, 1)].im, 0.5 * (m[(0, 0)].re - m[(1, 1)].re)]
}

/// Quantization axis `n(k)` of the symmetric-frame operator, closed form.
///
/// With `α = kā`, `β = k(1−ā)`, `c² = cos²(θ0/2)`, `s² = sin²(θ0/2)`:
///
/// ```text
/// sin E n_x =  sin θ0 cos θ1 cos α + sin θ1 (c² cos β − s² cos(k+α))
/// sin E n_y = −sin θ0 cos θ1 sin α + sin θ1 (c² sin β + s² sin(k+α))
/// ```
pub fn bloch_vector(k: f64, theta0: f64, theta1: f64, abar: f64) -> Result<[f64; 3]> {
    let sin_e = quasienergy(k, theta0, theta1).sin();
    if sin_e.abs() < 1e-12 {
        return Err(Error::UndefinedDirection(sin_e));
    }
    let (alpha, beta) = (k * abar, k * (1.0 - abar));
    let c2 = (theta0 / 2.0).cos().powi(2);
    let s2 = (theta0 / 2.0).sin().powi(2);
    let a = theta0.sin() * theta1.cos();
    let vx = a * alpha.cos() + theta1.sin() * (c2 * beta.cos() - s2 * (k + alpha).cos());
    let vy = -a * alpha.sin() + theta1.sin() * (c2 * beta.sin() + s2 * (k + alpha).sin());
    Ok([vx / sin_e, vy / sin_e, 0.0])
}

/// `‖σ_z W σ_z − W†‖₂`, zero for chiral-symmetric operators.
pub fn chiral_defect(w: &Mat2) -> f64 {
    let z = sigma_z();
    (z * w * z - w.adjoint()).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub k: f64,
    pub energy: f64,
}

/// Allowed momenta `2πl/M` of a ring with `M` cells.
pub fn k_grid(cells: usize) -> Vec<f64> {
    (0..cells).map(|l| 2.0 * PI * l as f64 / cells as f64).collect()
}

/// Upper band `E(k)` sampled at `points` momenta in `[−π, π]`.
pub fn band_structure(theta0: f64, theta1: f64, points: usize) -> Vec<BandPoint> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let k = -PI + 2.0 * PI * i as f64 / (n - 1) as f64;
            BandPoint { k, energy: quasienergy(k, theta0, theta1) }
        })
        .collect()
}
